"""Closed-form transfer dynamics for a two-spin chain (N = 4 in total).

With ``N_ch = 2`` the coupled block (spin 0 plus the chain) has three
spins, so the evolved state and the concurrence between spin 0' and the
chain end can be written down by hand.  The expressions below are kept
term for term as derived, without simplification, so that they remain an
independent check on the numerical pipeline.

The formulas describe the rotated frame: a plain XXZ block with coupling
``J~`` whose chain ground state carries the DM phase ``phi``.  Use
``protocol.run_transfer(..., phase_phi=phi)`` for the matching numerics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spincore import basis_index


@dataclass(frozen=True)
class TwoSpinParams:
    j_tilde: float
    delta: float = 0.0
    phi: float = 0.0

    def __post_init__(self):
        if self.j_tilde == 0:
            raise ValueError("j_tilde must be non-zero")

    @classmethod
    def from_chain(cls, j: float, delta: float, d: float) -> TwoSpinParams:
        return cls(math.copysign(math.hypot(j, d), j), delta, math.atan(d / j))

    @property
    def xi(self) -> float:
        return 2.0 * math.sqrt(2.0) * self.j_tilde

    @property
    def root(self) -> float:
        return math.sqrt(8.0 * self.j_tilde**2 + self.delta**2)

    @property
    def alpha(self) -> float:
        return (self.delta + self.root) / (2.0 * self.j_tilde)

    @property
    def beta(self) -> float:
        return -(self.delta - self.root) / (2.0 * self.j_tilde)


def concurrence_xx(params: TwoSpinParams, t):
    """Concurrence of (0', end) for the XX case (delta = 0)."""
    if params.delta != 0:
        raise ValueError("concurrence_xx needs delta = 0")
    t = np.asarray(t, dtype=np.float64)
    xi, phi = params.xi, params.phi
    c = np.cos(xi * t)
    s = np.sin(xi * t)
    e2 = np.exp(2j * phi)
    val = (1 / 8) * (
        4 * np.abs(-1 + c)
        - np.abs(e2 * (1 + c) + 1j * np.sqrt(2) * s) * np.abs(1 + c + 1j * np.sqrt(2) * e2 * s)
    )
    return np.maximum(val, 0.0)


def concurrence_xxz(params: TwoSpinParams, t):
    """Concurrence of (0', end) for general anisotropy."""
    t = np.asarray(t, dtype=np.float64)
    jt, phi = params.j_tilde, params.phi
    al, be = params.alpha, params.beta
    E = np.exp
    i = 1j
    na = al**2 + 2
    nb = be**2 + 2
    p1 = (
        E(2 * i * jt * t * be) * (E(-2 * i * phi) - be) * be / nb
        - E(-2 * i * jt * t * al) * al * (al + E(-2 * i * phi)) / na
    )
    p2 = (
        E(2 * i * jt * t * al) * (E(2 * i * phi) * al + 1) / na
        + E(-2 * i * jt * t * be) * (1 - E(2 * i * phi) * be) / nb
        - 1 / 2
    )
    p3 = (
        E(-2 * i * jt * t * al) * (al + E(-2 * i * phi)) / na
        - 1 / 2 * E(-2 * i * phi)
        + E(2 * i * jt * t * be) * (E(-2 * i * phi) - be) / nb
    )
    p4 = (
        E(-2 * i * jt * t * be) * be * (1 - E(2 * i * phi) * be) / nb
        - E(2 * i * jt * t * al) * al * (E(2 * i * phi) * al + 1) / na
    )
    q1 = np.abs(
        E(2 * i * jt * t * al) * (al + E(2 * i * phi)) / na
        + 1 / 2 * E(2 * i * phi)
        + E(-2 * i * jt * t * be) * (E(2 * i * phi) - be) / nb
    )
    q2 = np.abs(
        E(2 * i * jt * t * al) * (E(2 * i * phi) * al + 1) / na
        + E(-2 * i * jt * t * be) * (1 - E(2 * i * phi) * be) / nb
        + 1 / 2
    )
    val = 0.5 * (np.abs(p1 * p2 + p3 * p4) - q1 * q2)
    return np.maximum(val, 0.0)


def _ket(terms) -> np.ndarray:
    v = np.zeros(8, dtype=np.complex128)
    for bits, amp in terms:
        v[basis_index(bits)] += amp
    return v


def two_spin_eigensystem(params: TwoSpinParams) -> dict[str, tuple[float, np.ndarray]]:
    """Relevant eigenpairs of the three coupled spins (0, 1, 2).

    Kets are indexed with spin 0 on bit 0, i.e. ``|abc>`` maps to
    ``a + 2b + 4c``.
    """
    al, be, jt = params.alpha, params.beta, params.j_tilde
    r2 = 1 / math.sqrt(2)
    na = 1 / math.sqrt(2 + al**2)
    nb = 1 / math.sqrt(2 + be**2)
    return {
        "psi2": (0.0, r2 * _ket([("011", -1), ("110", 1)])),
        "psi3": (0.0, r2 * _ket([("001", -1), ("100", 1)])),
        "psi5": (-2 * jt * al, na * _ket([("011", 1), ("101", -al), ("110", 1)])),
        "psi6": (-2 * jt * al, na * _ket([("001", 1), ("010", -al), ("100", 1)])),
        "psi7": (2 * jt * be, nb * _ket([("011", 1), ("101", be), ("110", 1)])),
        "psi8": (2 * jt * be, nb * _ket([("001", 1), ("010", be), ("100", 1)])),
    }
