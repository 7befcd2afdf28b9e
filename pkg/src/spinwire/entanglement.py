"""Two-site reduced states, concurrence and singlet fraction.

Pair matrices use the layout ``|s_m s_n>`` with ``m`` first, so the basis
order is ``|00>, |01>, |10>, |11>`` and the index is ``2 s_m + s_n``.  When
particle-number symmetry holds the matrix has the X form::

    [[a, 0, 0, 0],
     [0, x, z, 0],
     [0, z*, y, 0],
     [0, 0, 0, b]]
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .spincore import POSITIVITY_TOL, MixedState, PureState, check_site, partial_trace, pauli_masks

X_FORM_TOL = 1e-8

SIGMA_YY = np.array([[0, 0, 0, -1], [0, 0, 1, 0], [0, 1, 0, 0], [-1, 0, 0, 0]], dtype=np.complex128)
_OUTER = ((0, 1), (0, 2), (1, 0), (2, 0), (1, 3), (2, 3), (3, 1), (3, 2))
_SINGLET = np.array([0, 1, -1, 0], dtype=np.complex128) / np.sqrt(2)


@dataclass(frozen=True, eq=False)
class TwoSiteState:
    rho4: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rho4, dtype=np.complex128)
        if r.shape != (4, 4):
            raise ValueError("two-site state must be 4x4")
        object.__setattr__(self, "rho4", r)

    @property
    def is_x(self) -> bool:
        return max(abs(self.rho4[i, j]) for i, j in _OUTER) < X_FORM_TOL

    @property
    def a(self) -> float:
        return float(self.rho4[0, 0].real)

    @property
    def x(self) -> float:
        return float(self.rho4[1, 1].real)

    @property
    def y(self) -> float:
        return float(self.rho4[2, 2].real)

    @property
    def b(self) -> float:
        return float(self.rho4[3, 3].real)

    @property
    def z(self) -> complex:
        return complex(self.rho4[1, 2])

    def components(self) -> tuple[float, float, float, float, complex]:
        if not self.is_x:
            raise ValueError("state is not of X form")
        return self.a, self.x, self.y, self.b, self.z

    @classmethod
    def from_components(cls, a, x, y, b, z) -> TwoSiteState:
        r = np.diag([a, x, y, b]).astype(np.complex128)
        r[1, 2] = z
        r[2, 1] = np.conj(z)
        return cls(r)


def reduce_to_pair(state, m: int, n: int) -> TwoSiteState:
    """Reduced state of sites ``(m, n)`` in the m-first layout."""
    if m == n:
        raise ValueError("pair sites must differ")
    red = partial_trace(state, [m, n]).rho
    if m < n:
        # partial_trace puts the lower site on bit 0; swap to m-first
        perm = [0, 2, 1, 3]
        red = red[np.ix_(perm, perm)]
    return TwoSiteState(red)


def _rho(ts) -> np.ndarray:
    return ts.rho4 if isinstance(ts, TwoSiteState) else np.asarray(ts, dtype=np.complex128)


def concurrence_general(ts) -> float:
    """Wootters concurrence of any two-qubit state.

    The square roots of the eigenvalues of rho (Y rho* Y) are taken as the
    singular values of A^T Y A with rho = A A^dagger, which stays accurate
    for nearly pure states where R has tiny eigenvalues.
    """
    r = _rho(ts)
    r = 0.5 * (r + r.conj().T)
    w, v = np.linalg.eigh(r)
    if w[0] < -POSITIVITY_TOL:
        raise ValueError(f"not a density matrix (eigenvalue {w[0]:.3e})")
    a = v * np.sqrt(np.clip(w, 0.0, None))
    lam = np.linalg.svd(a.T @ SIGMA_YY @ a, compute_uv=False)
    return float(min(1.0, max(0.0, lam[0] - lam[1:].sum())))


def concurrence_x(ts: TwoSiteState) -> float:
    a, _, _, b, z = ts.components()
    return 2.0 * max(0.0, abs(z) - np.sqrt(max(a, 0.0) * max(b, 0.0)))


def singlet_fraction(ts) -> float:
    """<psi^-| rho |psi^->, evaluated as a quadratic form (valid for complex z)."""
    r = _rho(ts)
    return float(np.real(_SINGLET.conj() @ r @ _SINGLET))


def _expect_pauli(state, axes: dict[int, str]) -> complex:
    masks = pauli_masks(axes)
    if isinstance(state, PureState):
        v = state.amplitudes
        return complex(v.conj() @ kernels.pauli_string_apply(v, *masks))
    if isinstance(state, MixedState):
        total = 0j
        for w, v in zip(state.weights, state.vectors.T):
            total += w * (v.conj() @ kernels.pauli_string_apply(v, *masks))
        return complex(total)
    raise TypeError("expected PureState or MixedState")


def correlation_components(state, m: int, n: int) -> tuple[float, float, float, float, complex]:
    """X-state components from spin correlators of sites ``m`` and ``n``."""
    check_site(m, state.n_sites)
    check_site(n, state.n_sites)
    if m == n:
        raise ValueError("pair sites must differ")

    def ev(axes):
        return _expect_pauli(state, axes)

    zm = ev({m: "z"}).real
    zn = ev({n: "z"}).real
    zz = ev({m: "z", n: "z"}).real
    xx = ev({m: "x", n: "x"}).real
    yy = ev({m: "y", n: "y"}).real
    xy = ev({m: "x", n: "y"}).real
    yx = ev({m: "y", n: "x"}).real
    a = 0.25 * (1 + zm + zn + zz)
    x = 0.25 * (1 + zm - zn - zz)
    y = 0.25 * (1 - zm + zn - zz)
    b = 0.25 * (1 - zm - zn + zz)
    z = 0.25 * (xx + yy + 1j * (xy - yx))
    return a, x, y, b, z
