"""Shared fixtures and independent reference constructions.

The reference builders use explicit Kronecker products so they share no
code with the bit-mask machinery under test.
"""

from functools import reduce

import numpy as np
import pytest

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = {"x": SX, "y": SY, "z": SZ}


def kron_ops(ops: dict, n: int) -> np.ndarray:
    """Product of single-site matrices; site k is bit k, so it sits at
    factor n-1-k of the Kronecker product."""
    mats = [I2] * n
    for site, m in ops.items():
        mats[n - 1 - site] = m
    return reduce(np.kron, mats)


def ref_xxz_dm(n: int, bonds, j: float, delta: float, d: float, hz=None) -> np.ndarray:
    h = np.zeros((1 << n, 1 << n), dtype=complex)
    for i, k in bonds:
        h += j * (kron_ops({i: SX, k: SX}, n) + kron_ops({i: SY, k: SY}, n))
        h += delta * kron_ops({i: SZ, k: SZ}, n)
        h += d * (kron_ops({i: SX, k: SY}, n) - kron_ops({i: SY, k: SX}, n))
    if hz is not None:
        for s, f in enumerate(hz):
            if f:
                h += f * kron_ops({s: SZ}, n)
    return h


def chain_path(n: int, start: int = 0):
    return [(s, s + 1) for s in range(start, n - 1)]


def random_density(rng, n: int, rank: int | None = None) -> np.ndarray:
    dim = 1 << n
    a = rng.normal(size=(dim, rank or dim)) + 1j * rng.normal(size=(dim, rank or dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def random_unitary(rng, dim: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
