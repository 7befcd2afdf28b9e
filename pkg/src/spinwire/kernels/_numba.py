"""Loop kernels compiled with numba; mirrors ``_numpy`` one-for-one."""

import numpy as np
from numba import njit

_opts = {"cache": True, "nogil": True}


@njit(**_opts)
def _popc(v):
    c = 0
    while v:
        v &= v - 1
        c += 1
    return c


@njit(**_opts)
def popcount(states):
    out = np.empty(states.shape[0], dtype=np.int64)
    for k in range(states.shape[0]):
        out[k] = _popc(states[k])
    return out


@njit(**_opts)
def _sector_block(h, states, n_sites, bond_i, bond_j, jxy, jz, dm, hz):
    nb = states.shape[0]
    for col in range(nb):
        s = states[col]
        d = 0.0
        for site in range(n_sites):
            d += hz[site] * (1.0 - 2.0 * ((s >> site) & 1))
        for k in range(bond_i.shape[0]):
            i = bond_i[k]
            j = bond_j[k]
            bi = (s >> i) & 1
            bj = (s >> j) & 1
            d += jz[k] * (1.0 - 2.0 * bi) * (1.0 - 2.0 * bj)
            if bi != bj:
                t = s ^ ((1 << i) | (1 << j))
                row = np.searchsorted(states, t)
                if bi == 1:
                    h[row, col] += 2.0 * jxy[k] + 2.0j * dm[k]
                else:
                    h[row, col] += 2.0 * jxy[k] - 2.0j * dm[k]
        h[col, col] += d


def sector_block(states, n_sites, bond_i, bond_j, jxy, jz, dm, hz):
    states = np.ascontiguousarray(states, dtype=np.int64)
    # numpy's calloc-backed zeros beat an in-kernel fill for large blocks
    h = np.zeros((states.shape[0], states.shape[0]), dtype=np.complex128)
    _sector_block(
        h,
        states,
        int(n_sites),
        np.ascontiguousarray(bond_i, dtype=np.int64),
        np.ascontiguousarray(bond_j, dtype=np.int64),
        np.ascontiguousarray(jxy, dtype=np.float64),
        np.ascontiguousarray(jz, dtype=np.float64),
        np.ascontiguousarray(dm, dtype=np.float64),
        np.ascontiguousarray(hz, dtype=np.float64),
    )
    return h


@njit(**_opts)
def _phase(ny):
    r = ny % 4
    if r == 0:
        return 1.0 + 0.0j
    if r == 1:
        return 1.0j
    if r == 2:
        return -1.0 + 0.0j
    return -1.0j


@njit(**_opts)
def _pauli_string_matrix(n_sites, xmask, zmask, ny):
    dim = 1 << n_sites
    out = np.zeros((dim, dim), dtype=np.complex128)
    ph = _phase(ny)
    for s in range(dim):
        sign = 1.0 - 2.0 * (_popc(s & zmask) & 1)
        out[s ^ xmask, s] = ph * sign
    return out


def pauli_string_matrix(n_sites, xmask, zmask, ny):
    return _pauli_string_matrix(int(n_sites), int(xmask), int(zmask), int(ny))


@njit(**_opts)
def _pauli_string_apply(vec, xmask, zmask, ny):
    out = np.empty_like(vec)
    ph = _phase(ny)
    for s in range(vec.shape[0]):
        sign = 1.0 - 2.0 * (_popc(s & zmask) & 1)
        out[s ^ xmask] = ph * sign * vec[s]
    return out


def pauli_string_apply(vec, xmask, zmask, ny):
    return _pauli_string_apply(
        np.ascontiguousarray(vec, dtype=np.complex128), int(xmask), int(zmask), int(ny)
    )


@njit(**_opts)
def _xstate_accumulate(amps0, amps1, weights, ia, ix, iy, ib, p0, p1):
    nt = amps0.shape[0]
    nk = weights.shape[0]
    a = np.zeros(nt)
    x = np.zeros(nt)
    y = np.zeros(nt)
    b = np.zeros(nt)
    z = np.zeros(nt, dtype=np.complex128)
    for t in range(nt):
        for k in range(nk):
            w = weights[k]
            for s in ia:
                v = amps0[t, s, k]
                a[t] += w * (v.real * v.real + v.imag * v.imag)
            for s in ix:
                v = amps0[t, s, k]
                x[t] += w * (v.real * v.real + v.imag * v.imag)
            for s in iy:
                v = amps1[t, s, k]
                y[t] += w * (v.real * v.real + v.imag * v.imag)
            for s in ib:
                v = amps1[t, s, k]
                b[t] += w * (v.real * v.real + v.imag * v.imag)
            for q in range(p0.shape[0]):
                z[t] += w * amps0[t, p0[q], k] * np.conj(amps1[t, p1[q], k])
    return a, x, y, b, z


def xstate_accumulate(amps0, amps1, weights, ia, ix, iy, ib, p0, p1):
    as_i = lambda v: np.ascontiguousarray(v, dtype=np.int64)
    return _xstate_accumulate(
        np.ascontiguousarray(amps0, dtype=np.complex128),
        np.ascontiguousarray(amps1, dtype=np.complex128),
        np.ascontiguousarray(weights, dtype=np.float64),
        as_i(ia),
        as_i(ix),
        as_i(iy),
        as_i(ib),
        as_i(p0),
        as_i(p1),
    )
