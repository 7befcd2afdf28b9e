"""Exact spectral time evolution, ground states and Gibbs states."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .hamiltonian import BlockHamiltonian, ChainConfig, chain_blocks
from .spincore import MixedState, Operator, PureState, magnetization_sectors

DEGENERACY_TOL = 1e-9
_PHASE_CUT = 1e-10


class DegenerateGroundStateError(ValueError):
    """Raised when the lowest level is not unique."""


class DegeneracyWarning(UserWarning):
    pass


@dataclass(frozen=True, eq=False)
class SpectralBlock:
    states: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tag: int | None = None


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigensystem kept as independent blocks (one per popcount sector when
    the Hamiltonian conserves S^z, otherwise a single block)."""

    n_sites: int
    blocks: tuple

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def _order(self):
        ev = np.concatenate([b.eigenvalues for b in self.blocks])
        return ev, np.argsort(ev, kind="stable")

    @property
    def eigenvalues(self) -> np.ndarray:
        ev, order = self._order()
        return ev[order]

    @property
    def sector_tags(self) -> np.ndarray:
        tags = np.concatenate(
            [np.full(len(b.eigenvalues), -1 if b.tag is None else b.tag) for b in self.blocks]
        )
        return tags[self._order()[1]]

    @property
    def eigenvectors(self) -> np.ndarray:
        """Dense unitary with eigenvectors as columns in ascending energy."""
        cols = []
        for b in self.blocks:
            full = np.zeros((self.dim, len(b.eigenvalues)), dtype=np.complex128)
            full[b.states] = b.eigenvectors
            cols.append(full)
        return np.concatenate(cols, axis=1)[:, self._order()[1]]

    @property
    def norm(self) -> float:
        return float(max(np.abs(b.eigenvalues).max() for b in self.blocks if len(b.eigenvalues)))

    def propagate(self, vec, t: float) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.complex128)
        out = np.zeros_like(vec)
        for b in self.blocks:
            c = b.eigenvectors.conj().T @ vec[b.states]
            out[b.states] = b.eigenvectors @ (np.exp(-1j * b.eigenvalues * t) * c)
        return out


def _check_hermitian(m: np.ndarray):
    if np.abs(m - m.conj().T).max() > 1e-12 * max(1.0, np.abs(m).max()):
        raise ValueError("matrix is not Hermitian")


def decompose(h, blocked: bool | None = None) -> SpectralDecomposition:
    """Full eigensystem of ``h`` (Operator or BlockHamiltonian).

    Operators flagged ``conserves_sz`` are diagonalized sector by sector
    unless ``blocked=False``.
    """
    if isinstance(h, BlockHamiltonian):
        blocks = []
        for states, m in h.blocks:
            _check_hermitian(m)
            w, v = np.linalg.eigh(m)
            blocks.append(SpectralBlock(states, w, v, int(np.bitwise_count(states[0]))))
        return SpectralDecomposition(h.n_sites, tuple(blocks))
    if not isinstance(h, Operator):
        raise TypeError("expected Operator or BlockHamiltonian")
    m = h.matrix
    _check_hermitian(m)
    if blocked is None:
        blocked = h.conserves_sz
    if not blocked:
        w, v = np.linalg.eigh(m)
        return SpectralDecomposition(h.n_sites, (SpectralBlock(np.arange(h.dim), w, v),))
    blocks = []
    covered = np.zeros(h.dim, dtype=bool)
    for tag, states in enumerate(magnetization_sectors(h.n_sites)):
        covered[:] = False
        covered[states] = True
        if np.abs(m[np.ix_(states, ~covered)]).max(initial=0.0) > 1e-12:
            raise ValueError("operator couples different magnetization sectors")
        w, v = np.linalg.eigh(m[np.ix_(states, states)])
        blocks.append(SpectralBlock(states, w, v, tag))
    return SpectralDecomposition(h.n_sites, tuple(blocks))


def _as_spectrum(h) -> SpectralDecomposition:
    return h if isinstance(h, SpectralDecomposition) else decompose(h)


def fix_phase(v: np.ndarray) -> np.ndarray:
    """Make the first non-negligible amplitude real and positive."""
    mags = np.abs(v)
    k = int(np.argmax(mags > _PHASE_CUT * mags.max()))
    return v * (np.conj(v[k]) / mags[k])


def _lowest(spec: SpectralDecomposition, sector: int | None):
    blocks = [b for b in spec.blocks if sector is None or b.tag == sector]
    if not blocks:
        raise ValueError(f"no sector {sector} in this decomposition")
    energies = np.concatenate([b.eigenvalues for b in blocks])
    order = np.argsort(energies, kind="stable")
    tol = DEGENERACY_TOL * max(1.0, spec.norm)
    if len(energies) > 1 and energies[order[1]] - energies[order[0]] < tol:
        raise DegenerateGroundStateError(
            f"ground level is degenerate (gap {energies[order[1]] - energies[order[0]]:.3e}); "
            "add a small longitudinal field (eps > 0) to select a unique ground state"
        )
    k = int(order[0])
    for b in blocks:
        if k < len(b.eigenvalues):
            return b, k
        k -= len(b.eigenvalues)
    raise AssertionError("unreachable")


def ground_state(h, sector: int | None = None) -> PureState:
    """Unique lowest eigenvector, optionally restricted to a popcount sector."""
    spec = _as_spectrum(h)
    b, k = _lowest(spec, sector)
    v = np.zeros(spec.dim, dtype=np.complex128)
    v[b.states] = b.eigenvectors[:, k]
    return PureState(fix_phase(v), spec.n_sites)


def evolve_pure(psi0: PureState, spec: SpectralDecomposition, t: float) -> PureState:
    if psi0.n_sites != spec.n_sites:
        raise ValueError("state and Hamiltonian act on different registers")
    out = spec.propagate(psi0.amplitudes, t)
    return PureState(out / np.linalg.norm(out), spec.n_sites)


def evolve_mixed(rho0: MixedState, spec: SpectralDecomposition, t: float) -> MixedState:
    if rho0.n_sites != spec.n_sites:
        raise ValueError("state and Hamiltonian act on different registers")
    v = spec.eigenvectors
    e = spec.eigenvalues
    rt = v.conj().T @ rho0.rho @ v
    rt *= np.exp(-1j * np.subtract.outer(e, e) * t)
    rho = v @ rt @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    vecs = np.stack([spec.propagate(c, t) for c in rho0.vectors.T], axis=1)
    return MixedState(rho, spec.n_sites, rho0.weights.copy(), vecs)


def gibbs_weights(energies: np.ndarray, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValueError("inverse temperature must be >= 0")
    x = -beta * (energies - energies.min())
    w = np.exp(x)
    return w / w.sum()


def thermal_state(h, beta: float) -> MixedState:
    """exp(-beta H) / Z, built in the eigenbasis with the ground energy
    shifted to zero so large beta cannot overflow."""
    if beta < 0:
        raise ValueError("inverse temperature must be >= 0")
    spec = _as_spectrum(h)
    e = spec.eigenvalues
    v = spec.eigenvectors
    w = gibbs_weights(e, beta)
    rho = (v * w) @ v.conj().T
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real
    keep = w > 0
    return MixedState(rho, spec.n_sites, w[keep], v[:, keep])


# channels --------------------------------------------------------------------


@dataclass(frozen=True)
class Channel:
    """Initial state of the chain: ground state or Gibbs state at ``beta``.

    ``sector`` restricts the ground state to one popcount sector of the
    chain register (e.g. ``n_ch // 2`` for the zero-magnetization state).
    """

    kind: str = "ground"
    beta: float | None = None
    sector: int | None = None

    def __post_init__(self):
        if self.kind not in ("ground", "thermal"):
            raise ValueError("channel kind must be 'ground' or 'thermal'")
        if self.kind == "thermal" and (self.beta is None or self.beta < 0):
            raise ValueError("thermal channel needs beta >= 0")

    @classmethod
    def ground(cls, sector: int | None = None) -> Channel:
        return cls("ground", None, sector)

    @classmethod
    def thermal(cls, beta: float) -> Channel:
        return cls("thermal", float(beta))

    def describe(self) -> str:
        if self.kind == "thermal":
            return f"thermal(beta={self.beta:.12g})"
        return "ground" if self.sector is None else f"ground(sector={self.sector})"


@dataclass(frozen=True, eq=False)
class EnsembleGroup:
    """Chain vectors that share one popcount sector, with their weights."""

    states: np.ndarray
    vectors: np.ndarray
    weights: np.ndarray
    tag: int


@dataclass(frozen=True, eq=False)
class ChainEnsemble:
    cfg: ChainConfig
    groups: tuple
    tie_broken: bool = False


def chain_ensemble(
    cfg: ChainConfig, channel: Channel, tie_break: bool = True, weight_cut: float = 1e-16
) -> ChainEnsemble:
    """Decompose the chain's initial state into sector-pure members.

    A degenerate ground level is resolved by rebuilding with a weak
    longitudinal field (warning emitted) unless ``tie_break`` is False.
    """
    spec = decompose(chain_blocks(cfg))
    if channel.kind == "thermal":
        w_all = gibbs_weights(np.concatenate([b.eigenvalues for b in spec.blocks]), channel.beta)
        splits = np.cumsum([len(b.eigenvalues) for b in spec.blocks])[:-1]
        out = []
        for b, w in zip(spec.blocks, np.split(w_all, splits)):
            keep = w > weight_cut
            if keep.any():
                out.append(EnsembleGroup(b.states, b.eigenvectors[:, keep], w[keep], b.tag))
        return ChainEnsemble(cfg, tuple(out))
    try:
        b, k = _lowest(spec, channel.sector)
    except DegenerateGroundStateError:
        if not tie_break or cfg.eps > 0:
            raise
        fixed = cfg.with_tie_break()
        warnings.warn(
            f"degenerate chain ground state for {cfg}; selecting one with eps={fixed.eps:.1e}",
            DegeneracyWarning,
            stacklevel=2,
        )
        inner = chain_ensemble(fixed, channel, tie_break=False)
        return ChainEnsemble(inner.cfg, inner.groups, tie_broken=True)
    v = fix_phase(b.eigenvectors[:, k])
    return ChainEnsemble(cfg, (EnsembleGroup(b.states, v[:, None], np.ones(1), b.tag),))


# amplitudes of (|01> - |10>)/sqrt(2) on (0', 0) keyed by the 2-bit index
# s0' + 2 s0: "01" -> 2 (+), "10" -> 1 (-)
SINGLET = {2: 1 / np.sqrt(2), 1: -1 / np.sqrt(2)}


def initial_state(cfg: ChainConfig, channel: Channel, tie_break: bool = True):
    """Singlet on (0', 0) tensored with the chain state, full N-site register."""
    ens = chain_ensemble(cfg, channel, tie_break=tie_break)
    n = cfg.n_total
    dim = 1 << n
    members, weights = [], []
    for g in ens.groups:
        for k in range(len(g.weights)):
            psi = np.zeros(dim, dtype=np.complex128)
            for low, amp in SINGLET.items():
                psi[(g.states << 2) | low] = amp * g.vectors[:, k]
            members.append(psi)
            weights.append(g.weights[k])
    if channel.kind == "ground":
        return PureState(members[0], n)
    vecs = np.stack(members, axis=1)
    w = np.asarray(weights)
    rho = (vecs * w) @ vecs.conj().T
    return MixedState(0.5 * (rho + rho.conj().T), n, w, vecs)
