"""Vectorized numpy versions of the bit-level kernels.

Every function here has a loop-based twin in ``_numba`` with the same
signature and the same output up to floating point summation order.
"""

import numpy as np


def popcount(states):
    return np.bitwise_count(np.asarray(states, dtype=np.int64)).astype(np.int64)


def sector_block(states, n_sites, bond_i, bond_j, jxy, jz, dm, hz):
    """Dense matrix of an XXZ + z-DM bond Hamiltonian restricted to ``states``.

    ``states`` must be sorted and closed under the flip-flop moves of every
    bond (a full popcount sector, or the whole register).  Bond ``k`` acts as
    ``jxy[k] (XX + YY) + jz[k] ZZ + dm[k] (XY - YX)`` on sites
    ``(bond_i[k], bond_j[k])``; ``hz`` is a per-site longitudinal field.
    """
    states = np.asarray(states, dtype=np.int64)
    nb = states.shape[0]
    h = np.zeros((nb, nb), dtype=np.complex128)
    shifts = np.arange(n_sites, dtype=np.int64)
    spins = 1.0 - 2.0 * ((states[:, None] >> shifts[None, :]) & 1)
    diag = spins @ np.asarray(hz, dtype=np.float64)
    cols = np.arange(nb)
    for i, j, a, b, c in zip(bond_i, bond_j, jxy, jz, dm):
        diag = diag + b * spins[:, i] * spins[:, j]
        bi = (states >> i) & 1
        bj = (states >> j) & 1
        hop = bi != bj
        if not hop.any():
            continue
        dst = states[hop] ^ ((1 << int(i)) | (1 << int(j)))
        rows = np.searchsorted(states, dst)
        # <s'|XY-YX|s> is +2i when site i starts down, -2i when it starts up
        val = 2.0 * a + 2.0j * c * np.where(bi[hop] == 1, 1.0, -1.0)
        h[rows, cols[hop]] += val
    h[cols, cols] += diag
    return h


def pauli_string_matrix(n_sites, xmask, zmask, ny):
    dim = 1 << n_sites
    idx = np.arange(dim, dtype=np.int64)
    sign = 1.0 - 2.0 * (popcount(idx & zmask) & 1)
    out = np.zeros((dim, dim), dtype=np.complex128)
    out[idx ^ xmask, idx] = (1j ** (ny % 4)) * sign
    return out


def pauli_string_apply(vec, xmask, zmask, ny):
    vec = np.asarray(vec, dtype=np.complex128)
    idx = np.arange(vec.shape[0], dtype=np.int64)
    sign = 1.0 - 2.0 * (popcount(idx & zmask) & 1)
    out = np.empty_like(vec)
    out[idx ^ xmask] = (1j ** (ny % 4)) * sign * vec
    return out


def xstate_accumulate(amps0, amps1, weights, ia, ix, iy, ib, p0, p1):
    """X-state entries of the (0', end) pair from branch amplitudes.

    ``amps0``/``amps1`` have shape (T, n, K): time, sector-local basis
    index, ensemble member.  Returns a, x, y, b (real) and z (complex),
    each of length T.
    """
    w = np.asarray(weights, dtype=np.float64)
    p_0 = (amps0.real**2 + amps0.imag**2) @ w
    p_1 = (amps1.real**2 + amps1.imag**2) @ w
    a = p_0[:, ia].sum(axis=1)
    x = p_0[:, ix].sum(axis=1)
    y = p_1[:, iy].sum(axis=1)
    b = p_1[:, ib].sum(axis=1)
    z = ((amps0[:, p0, :] * amps1[:, p1, :].conj()) @ w).sum(axis=1)
    return a, x, y, b, z
