"""Compare the numba and pure-numpy kernel backends.

Usage::

    python benchmarks/bench_kernels.py [--repeat 200] [--end-to-end]

Kernel timings call both backends directly in one process (numba compile
time is excluded by a warm-up call). ``--end-to-end`` also times a batch of
scheme runs in two subprocesses, one per value of ``FBDOF_NUMBA``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from fbdof.kernels import numba_backend, numpy_backend


# (terms, distinct atoms, rows, square size): scheme-typical and stress sizes
SIZES = {"small": (24, 12, 6, 8), "large": (4000, 600, 40, 48)}


def _inputs(rng, size):
    n_terms, n_atoms, rows, dim = SIZES[size]
    ids = rng.integers(0, n_atoms, n_terms).astype(np.int64)
    coefs = rng.standard_normal(n_terms) + 1j * rng.standard_normal(n_terms)
    indptr = np.linspace(0, n_terms, rows + 1).astype(np.int64)
    row_ids = np.concatenate([np.unique(ids[indptr[r]:indptr[r + 1]]) for r in range(rows)])
    sizes = [np.unique(ids[indptr[r]:indptr[r + 1]]).size for r in range(rows)]
    packed_ptr = np.concatenate(([0], np.cumsum(sizes))).astype(np.int64)
    packed_coefs = rng.standard_normal(row_ids.size) + 1j * rng.standard_normal(row_ids.size)
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    hpd = a @ a.conj().T + dim * np.eye(dim)
    return {
        "merge_terms": (ids, coefs, 1e-10),
        "densify": (packed_ptr, row_ids, packed_coefs),
        "sparsify": None,  # filled from densify's output
        "singular_values": (a,),
        "cholesky_logdet": (hpd,),
    }


def bench_kernels(repeat, size):
    args = _inputs(np.random.default_rng(0), size)
    cols, dense = numpy_backend.densify(*args["densify"])
    args["sparsify"] = (dense, np.abs(dense) + 1.0, cols, 1e-10)
    rows = []
    for name, a in args.items():
        fns = {"numpy": getattr(numpy_backend, name)}
        if numba_backend is not None:
            fns["numba"] = getattr(numba_backend, name)
        times = {}
        for backend, fn in fns.items():
            fn(*a)  # warm-up / compile
            times[backend] = min(timeit.repeat(lambda: fn(*a), number=repeat, repeat=3)) / repeat
        rows.append((name, times))
    return rows


_E2E = """
import time
from fbdof.kernels import BACKEND
from fbdof.schemes import run_scheme
from fbdof.analysis import verify_decodability
run_scheme("k_ic", {"K": 3}, noiseless=True)
t0 = time.perf_counter()
for trial in range(20):
    for s, p in (("x2_mimo", {"M": 3, "N": 3}), ("mat_bc", {"K": 4}), ("k_ic", {"K": 3})):
        verify_decodability(run_scheme(s, p, trial=trial, noiseless=True))
print(BACKEND, time.perf_counter() - t0)
"""


def bench_end_to_end():
    out = []
    for flag in ("1", "0"):
        env = dict(os.environ, FBDOF_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True,
                             text=True, check=True)
        backend, secs = res.stdout.split()
        out.append((backend, float(secs)))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args(argv)
    for size in SIZES:
        print(f"{size} inputs {SIZES[size]}")
        print(f"{'kernel':<18}{'numpy (us)':>12}{'numba (us)':>12}{'speedup':>10}")
        for name, t in bench_kernels(args.repeat, size):
            npy = t["numpy"] * 1e6
            nb = t.get("numba")
            if nb is None:
                print(f"{name:<18}{npy:>12.2f}{'n/a':>12}")
                continue
            print(f"{name:<18}{npy:>12.2f}{nb * 1e6:>12.2f}{npy / (nb * 1e6):>9.2f}x")
        print()
    if args.end_to_end:
        for backend, secs in bench_end_to_end():
            print(f"end-to-end 60 runs + decodability, {backend:<6} backend: {secs:.3f} s")


if __name__ == "__main__":
    main()
