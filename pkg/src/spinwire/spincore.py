"""Basis bookkeeping, Pauli algebra, partial traces and state containers.

Conventions used throughout the package:

* Register order is ``[0', 0, 1, ..., N_ch]``: position 0 is the detached
  spin 0', position 1 is spin 0, position ``N - 1`` is the far end of the
  chain.
* Bit ``k`` of a basis index is the spin at position ``k`` (little-endian).
* Bit value 0 is spin up (sigma^z = +1), bit value 1 is spin down.
* Ket strings such as ``"01"`` list sites left to right starting from
  position 0, so ``"01"`` is index 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels

HERMITIAN_TOL = 1e-12
STATE_TOL = 1e-10
POSITIVITY_TOL = 1e-9

_AXES = ("x", "y", "z")


def check_site(site: int, n: int) -> int:
    site = int(site)
    if not 0 <= site < n:
        raise ValueError(f"site {site} out of range for {n} sites")
    return site


def basis_index(bits) -> int:
    """Index of a ket given as a string or sequence of 0/1, site 0 first."""
    return sum(int(b) << k for k, b in enumerate(bits))


def basis_bits(index: int, n: int) -> str:
    return "".join(str((int(index) >> k) & 1) for k in range(n))


def magnetization(index, n: int):
    """Sum of sigma^z eigenvalues of basis state(s) ``index``."""
    m = n - 2 * kernels.numpy_impl.popcount(index)
    return int(m) if np.ndim(m) == 0 else m


def magnetization_sectors(n: int) -> list[np.ndarray]:
    """Basis indices grouped by popcount; entry ``m`` holds popcount ``m``."""
    if n < 1:
        raise ValueError("need at least one site")
    idx = np.arange(1 << n, dtype=np.int64)
    pc = kernels.numpy_impl.popcount(idx)
    return [idx[pc == m] for m in range(n + 1)]


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense operator on ``n_sites`` spins.

    ``conserves_sz`` promises the matrix is block diagonal in popcount; the
    eigensolver then works sector by sector.
    """

    matrix: np.ndarray
    n_sites: int
    hermitian: bool = False
    conserves_sz: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        dim = 1 << self.n_sites
        if m.shape != (dim, dim):
            raise ValueError(f"matrix shape {m.shape} does not match {self.n_sites} sites")
        if self.hermitian and np.abs(m - m.conj().T).max() > HERMITIAN_TOL * max(1.0, np.abs(m).max()):
            raise ValueError("operator flagged hermitian but M != M^dagger")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def __add__(self, other: Operator) -> Operator:
        _same_size(self, other)
        return Operator(
            self.matrix + other.matrix,
            self.n_sites,
            self.hermitian and other.hermitian,
            self.conserves_sz and other.conserves_sz,
        )

    def __radd__(self, other):
        # lets sum() start from 0
        if isinstance(other, (int, float)) and other == 0:
            return self
        return NotImplemented

    def __sub__(self, other: Operator) -> Operator:
        return self + (-1.0) * other

    def __mul__(self, c) -> Operator:
        real = np.isreal(c)
        return Operator(c * self.matrix, self.n_sites, self.hermitian and real, self.conserves_sz)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, Operator):
            _same_size(self, other)
            return Operator(self.matrix @ other.matrix, self.n_sites)
        return self.matrix @ other

    def commutator(self, other: Operator) -> np.ndarray:
        return self.matrix @ other.matrix - other.matrix @ self.matrix


def _same_size(a: Operator, b: Operator):
    if a.n_sites != b.n_sites:
        raise ValueError(f"size mismatch: {a.n_sites} vs {b.n_sites} sites")


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray
    n_sites: int

    def __post_init__(self):
        v = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        if v.shape[0] != 1 << self.n_sites:
            raise ValueError("amplitude vector length does not match register size")
        if abs(np.linalg.norm(v) - 1.0) > STATE_TOL:
            raise ValueError(f"state not normalized (norm {np.linalg.norm(v):.3e})")
        object.__setattr__(self, "amplitudes", v)

    def density_matrix(self) -> MixedState:
        v = self.amplitudes
        return MixedState(np.outer(v, v.conj()), self.n_sites, np.ones(1), v[:, None].copy())

    def expect(self, op: Operator) -> complex:
        v = self.amplitudes
        return complex(v.conj() @ (op.matrix @ v))


@dataclass(frozen=True, eq=False)
class MixedState:
    """Density matrix, optionally with a cached decomposition
    ``rho = sum_k weights[k] |vectors[:, k]><vectors[:, k]|``."""

    rho: np.ndarray
    n_sites: int
    weights: np.ndarray | None = field(default=None, repr=False)
    vectors: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        r = np.asarray(self.rho, dtype=np.complex128)
        dim = 1 << self.n_sites
        if r.shape != (dim, dim):
            raise ValueError("density matrix shape does not match register size")
        if abs(np.trace(r).real - 1.0) > STATE_TOL:
            raise ValueError(f"trace {np.trace(r).real:.12f} != 1")
        if np.abs(r - r.conj().T).max() > STATE_TOL:
            raise ValueError("density matrix not Hermitian")
        object.__setattr__(self, "rho", r)
        if self.weights is None:
            w, v = np.linalg.eigh(r)
            if w[0] < -POSITIVITY_TOL:
                raise ValueError(f"density matrix has eigenvalue {w[0]:.3e} < 0")
            keep = w > 1e-14
            object.__setattr__(self, "weights", w[keep])
            object.__setattr__(self, "vectors", v[:, keep])

    @property
    def dim(self) -> int:
        return 1 << self.n_sites

    def expect(self, op: Operator) -> complex:
        return complex(np.trace(self.rho @ op.matrix))


def pauli_masks(axes: dict[int, str]) -> tuple[int, int, int]:
    xmask = zmask = ny = 0
    for site, ax in axes.items():
        if ax not in _AXES:
            raise ValueError(f"unknown Pauli axis {ax!r}")
        if ax in "xy":
            xmask |= 1 << site
        if ax in "yz":
            zmask |= 1 << site
        ny += ax == "y"
    return xmask, zmask, ny


def pauli_string(axes: dict[int, str], n: int) -> Operator:
    """Tensor product of Paulis given as ``{site: axis}``, identity elsewhere."""
    for s in axes:
        check_site(s, n)
    xmask, zmask, ny = pauli_masks(axes)
    return Operator(kernels.pauli_string_matrix(n, xmask, zmask, ny), n, hermitian=True)


def apply_pauli_string(axes: dict[int, str], vec: np.ndarray) -> np.ndarray:
    """Matrix-free action of a Pauli string on a state vector."""
    n = int(np.log2(len(vec)))
    for s in axes:
        check_site(s, n)
    return kernels.pauli_string_apply(vec, *pauli_masks(axes))


def pauli_at(axis: str, site: int, n: int) -> Operator:
    return pauli_string({check_site(site, n): axis}, n)


def two_site_coupling(axis_a: str, axis_b: str, i: int, j: int, n: int) -> Operator:
    """sigma^a_i sigma^b_j, built directly from bit masks."""
    i, j = check_site(i, n), check_site(j, n)
    if i == j:
        raise ValueError("two_site_coupling needs distinct sites")
    return pauli_string({i: axis_a, j: axis_b}, n)


def _as_rho(state) -> tuple[np.ndarray | None, np.ndarray | None, int]:
    if isinstance(state, PureState):
        return None, state.amplitudes, state.n_sites
    if isinstance(state, MixedState):
        return state.rho, None, state.n_sites
    raise TypeError("expected PureState or MixedState")


def partial_trace(state, keep) -> MixedState:
    """Reduced state on ``keep`` (ascending order, register bit convention:
    the lowest kept site becomes bit 0 of the result)."""
    keep_list = [int(k) for k in keep]
    if not keep_list:
        raise ValueError("keep set is empty")
    if len(set(keep_list)) != len(keep_list):
        raise ValueError("duplicate sites in keep set")
    rho, psi, n = _as_rho(state)
    for k in keep_list:
        check_site(k, n)
    keep_list.sort()
    rest = [s for s in range(n) if s not in keep_list]
    # tensor axis for site s is n-1-s; place kept sites so the reshaped
    # index is little-endian again
    kept_axes = [n - 1 - s for s in reversed(keep_list)]
    rest_axes = [n - 1 - s for s in rest]
    dk = 1 << len(keep_list)
    if psi is not None:
        t = psi.reshape((2,) * n).transpose(kept_axes + rest_axes).reshape(dk, -1)
        red = t @ t.conj().T
    else:
        t = rho.reshape((2,) * (2 * n))
        perm = kept_axes + rest_axes + [n + a for a in kept_axes] + [n + a for a in rest_axes]
        dr = 1 << len(rest)
        t = t.transpose(perm).reshape(dk, dr, dk, dr)
        red = np.einsum("arbr->ab", t)
    red = 0.5 * (red + red.conj().T)
    return MixedState(red, len(keep_list))
