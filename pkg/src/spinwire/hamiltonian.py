"""XXZ chain with z-axis Dzyaloshinskii-Moriya term, its end coupling, and
the diagonal gauge that maps it onto a plain XXZ chain.

Each bond ``(i, j)`` carries

    J (X_i X_j + Y_i Y_j) + Delta Z_i Z_j + D (X_i Y_j - Y_i X_j)

In the raising/lowering language the flip-flop part is
``2 (J + iD) s+_i s-_j + h.c. = 2 J~ e^{i phi} s+_i s-_j + h.c.``, so rotating
site ``m`` about z by an angle proportional to ``m * phi`` removes the phase
and leaves an XXZ chain with coupling ``J~ = sgn(J) sqrt(J^2 + D^2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .spincore import Operator, magnetization_sectors

TIE_BREAK_FIELD = 1e-6
UNITARY_TOL = 1e-10


@dataclass(frozen=True)
class ChainConfig:
    n_ch: int
    j: float = 1.0
    delta: float = 0.0
    d: float = 0.0
    eps: float = 0.0

    def __post_init__(self):
        if int(self.n_ch) != self.n_ch or self.n_ch < 2:
            raise ValueError(f"chain length must be an integer >= 2, got {self.n_ch}")
        if self.j == 0 or not math.isfinite(self.j):
            raise ValueError("exchange coupling J must be finite and non-zero")
        if self.d < 0:
            raise ValueError("DM strength D must be >= 0 (use the phase-frame path for negative angles)")
        if self.eps < 0:
            raise ValueError("symmetry-breaking field must be >= 0")
        object.__setattr__(self, "n_ch", int(self.n_ch))

    @property
    def n_total(self) -> int:
        return self.n_ch + 2

    @property
    def j_tilde(self) -> float:
        return math.copysign(math.hypot(self.j, self.d), self.j)

    @property
    def phi(self) -> float:
        return math.atan(self.d / self.j)

    def with_tie_break(self) -> ChainConfig:
        return replace(self, eps=TIE_BREAK_FIELD * abs(self.j))

    def modified(self) -> ChainConfig:
        """Same chain after gauging away D: coupling J~, no DM term."""
        return replace(self, j=self.j_tilde, d=0.0)


@dataclass(frozen=True, eq=False)
class Bonds:
    """Nearest-neighbour bond list in array form (the kernel input)."""

    i: np.ndarray
    j: np.ndarray
    jxy: np.ndarray
    jz: np.ndarray
    dm: np.ndarray

    @classmethod
    def path(cls, positions, j: float, delta: float, d: float) -> Bonds:
        p = np.asarray(positions, dtype=np.int64)
        nb = max(len(p) - 1, 0)
        return cls(p[:-1], p[1:], np.full(nb, float(j)), np.full(nb, float(delta)), np.full(nb, float(d)))


@dataclass(frozen=True, eq=False)
class BlockHamiltonian:
    """Hamiltonian stored as its popcount blocks: ``blocks[m] = (states, H_m)``."""

    n_sites: int
    blocks: tuple

    def dense(self) -> np.ndarray:
        dim = 1 << self.n_sites
        out = np.zeros((dim, dim), dtype=np.complex128)
        for states, h in self.blocks:
            out[np.ix_(states, states)] = h
        return out


def _field(n_sites: int, positions, eps: float) -> np.ndarray:
    hz = np.zeros(n_sites)
    if eps:
        hz[list(positions)] = eps
    return hz


def bond_operator(n_sites: int, bonds: Bonds, hz=None) -> Operator:
    hz = np.zeros(n_sites) if hz is None else np.asarray(hz, dtype=np.float64)
    states = np.arange(1 << n_sites, dtype=np.int64)
    m = kernels.sector_block(states, n_sites, bonds.i, bonds.j, bonds.jxy, bonds.jz, bonds.dm, hz)
    return Operator(m, n_sites, hermitian=True, conserves_sz=True)


def bond_blocks(n_sites: int, bonds: Bonds, hz=None) -> BlockHamiltonian:
    """Sector blocks built directly; the full matrix is never formed."""
    hz = np.zeros(n_sites) if hz is None else np.asarray(hz, dtype=np.float64)
    blocks = []
    for states in magnetization_sectors(n_sites):
        h = kernels.sector_block(states, n_sites, bonds.i, bonds.j, bonds.jxy, bonds.jz, bonds.dm, hz)
        blocks.append((states, h))
    return BlockHamiltonian(n_sites, tuple(blocks))


# register layouts ------------------------------------------------------------
# chain:   N_ch sites, chain spin m at bit m-1
# coupled: N_ch+1 sites, spin 0 at bit 0, chain spin m at bit m
# total:   N sites, 0' at bit 0, spin 0 at bit 1, chain spin m at bit m+1


def chain_bonds(cfg: ChainConfig) -> Bonds:
    return Bonds.path(range(cfg.n_ch), cfg.j, cfg.delta, cfg.d)


def coupled_bonds(cfg: ChainConfig) -> Bonds:
    return Bonds.path(range(cfg.n_ch + 1), cfg.j, cfg.delta, cfg.d)


def chain_field(cfg: ChainConfig, offset: int = 0) -> np.ndarray:
    return _field(cfg.n_ch + offset, range(offset, offset + cfg.n_ch), cfg.eps)


def build_chain(cfg: ChainConfig) -> Operator:
    """Open chain Hamiltonian on the N_ch chain spins."""
    return bond_operator(cfg.n_ch, chain_bonds(cfg), chain_field(cfg))


def build_end_coupling(cfg: ChainConfig) -> Operator:
    """Bond between spin 0 (position 1) and chain spin 1 (position 2)."""
    n = cfg.n_total
    return bond_operator(n, Bonds.path([1, 2], cfg.j, cfg.delta, cfg.d))


@dataclass(frozen=True, eq=False)
class HamiltonianSet:
    h_chain: Operator
    h_total: Operator
    h_tilde_chain: Operator


def build_total(cfg: ChainConfig) -> HamiltonianSet:
    n = cfg.n_total
    bonds = Bonds.path(range(1, n), cfg.j, cfg.delta, cfg.d)
    h_total = bond_operator(n, bonds, _field(n, range(2, n), cfg.eps))
    return HamiltonianSet(build_chain(cfg), h_total, build_chain(cfg.modified()))


def chain_blocks(cfg: ChainConfig) -> BlockHamiltonian:
    return bond_blocks(cfg.n_ch, chain_bonds(cfg), chain_field(cfg))


def coupled_blocks(cfg: ChainConfig) -> BlockHamiltonian:
    """Spin 0 plus chain, i.e. H_ch + H_I without the spectator 0'."""
    return bond_blocks(cfg.n_ch + 1, coupled_bonds(cfg), chain_field(cfg, offset=1))


# gauge -----------------------------------------------------------------------

_OFFSETS = ("standard", "total_frame")


def gauge_coefficients(n_coupled: int, offsets: str = "standard") -> np.ndarray:
    """Rotation multiplier per site: m-1 (standard) or 2m-1 (total_frame)."""
    if n_coupled < 1:
        raise ValueError("need at least one site")
    m = np.arange(1, n_coupled + 1)
    if offsets == "standard":
        return m - 1
    if offsets == "total_frame":
        return 2 * m - 1
    raise ValueError(f"offsets must be one of {_OFFSETS}")


def gauge_phases(states, phi: float, coefficients) -> np.ndarray:
    """Diagonal of exp(i phi/2 sum_m c_m Z_m) on the given basis states.

    Site ``k`` of the register gets multiplier ``coefficients[k]``.  The
    half angle and positive sign are what make the DM bond phase cancel.
    """
    states = np.asarray(states, dtype=np.int64)
    c = np.asarray(coefficients, dtype=np.float64)
    shifts = np.arange(len(c), dtype=np.int64)
    spins = 1.0 - 2.0 * ((states[:, None] >> shifts[None, :]) & 1)
    return np.exp(0.5j * phi * (spins @ c))


def gauge_unitary(n_coupled: int, phi: float, offsets: str = "standard") -> Operator:
    c = gauge_coefficients(n_coupled, offsets)
    diag = gauge_phases(np.arange(1 << n_coupled), phi, c)
    return Operator(np.diag(diag), n_coupled, conserves_sz=True)


def gauge_transform(h: Operator, u: Operator) -> Operator:
    """U H U^dagger."""
    if h.n_sites != u.n_sites:
        raise ValueError(f"dimension mismatch: {h.n_sites} vs {u.n_sites} sites")
    um = u.matrix
    if np.abs(um @ um.conj().T - np.eye(u.dim)).max() > UNITARY_TOL:
        raise ValueError("gauge operator is not unitary")
    m = um @ h.matrix @ um.conj().T
    if h.hermitian:
        m = 0.5 * (m + m.conj().T)
    return Operator(m, h.n_sites, hermitian=h.hermitian, conserves_sz=h.conserves_sz and u.conserves_sz)
