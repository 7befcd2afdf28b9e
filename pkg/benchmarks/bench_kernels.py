"""Compare the numba and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--sites 14] [--repeat 5]

Times each kernel on inputs of realistic size, then a full N=8 transfer
run in a fresh interpreter per backend (SPINWIRE_NUMBA=1 / 0), so the
selection logic is exercised as a user would see it.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from spinwire import kernels
from spinwire.hamiltonian import Bonds
from spinwire.spincore import magnetization_sectors

E2E = (
    "import time; from spinwire import ChainConfig, Channel, run_transfer, kernels;"
    "run_transfer(ChainConfig(4, 1.0, -0.5, 1.0));"
    "t = time.perf_counter();"
    "run_transfer(ChainConfig(6, 1.0, -0.5, 1.0), Channel.thermal(1.0));"
    "print(kernels.BACKEND, time.perf_counter() - t)"
)


def cases(n_sites: int, rng):
    states = magnetization_sectors(n_sites)[n_sites // 2]
    bonds = Bonds.path(range(n_sites), 1.0, -0.5, 0.8)
    hz = np.zeros(n_sites)
    vec = rng.normal(size=1 << n_sites) + 1j * rng.normal(size=1 << n_sites)
    t, n, k = 400, 256, 8
    amps0 = rng.normal(size=(t, n, k)) + 1j * rng.normal(size=(t, n, k))
    amps1 = rng.normal(size=(t, n, k)) + 1j * rng.normal(size=(t, n, k))
    half = np.arange(n // 2)
    acc = (amps0, amps1, np.full(k, 1 / k), half, half + n // 2, half, half + n // 2, half, half)
    return {
        "popcount": (states,),
        "sector_block": (states, n_sites, bonds.i, bonds.j, bonds.jxy, bonds.jz, bonds.dm, hz),
        "pauli_string_apply": (vec, 0b1011, 0b0110, 1),
        "pauli_string_matrix": (min(n_sites, 10), 0b101, 0b011, 1),
        "xstate_accumulate": acc,
    }


def best_of(fn, args, repeat):
    fn(*args)  # warm-up, includes JIT compilation
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sites", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.numba_impl is None:
        sys.exit("numba backend unavailable (numba missing or SPINWIRE_NUMBA=0)")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for name, fargs in cases(args.sites, rng).items():
        t_np = best_of(getattr(kernels.numpy_impl, name), fargs, args.repeat)
        t_nb = best_of(getattr(kernels.numba_impl, name), fargs, args.repeat)
        print(f"{name:<22}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>9.1f}x")

    print("\nend-to-end thermal transfer, N=8:")
    for flag in ("1", "0"):
        env = dict(os.environ, SPINWIRE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<6} {float(secs):.3f} s")


if __name__ == "__main__":
    main()
