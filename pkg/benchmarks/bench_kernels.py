"""Numba vs numpy timings for the grid kernels.

Run with ``python benchmarks/bench_kernels.py [--repeat N]``. Both backends
are called explicitly, so the PHROBUST_DISABLE_NUMBA flag does not matter
here. The first numba call (compilation, or cache load) is excluded.
"""

import argparse
import time

import numpy as np
import scipy.linalg as sla

from phrobust import _backend, _kernels
from phrobust.model import assemble_w
from phrobust.oracle import random_passive_model


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(rng):
    for n, m in ((2, 1), (6, 3), (12, 2)):
        M = random_passive_model(rng, n, m).model
        A, B, C, D = M.matrices()
        xis = np.linspace(0.0, 0.9 * np.linalg.eigvalsh(D.T + D)[0], 101)
        w = np.linspace(0.0, 50.0, 1001)
        yield f"gamma_grid n={n} m={m} 101x1001", lambda b, a=(A, B, C, D, xis, w): _kernels.gamma_grid(*a, backend=b)
    for n in (4, 16):
        A = rng.standard_normal((n, n)) - 2 * n * np.eye(n)
        w = np.linspace(0.0, 100.0, 20_001)
        yield f"sigma_min_grid n={n} 20001", lambda b, a=(A, w): _kernels.sigma_min_grid(*a, backend=b)
    for n, m in ((3, 2), (6, 3)):
        item = random_passive_model(rng, n, m)
        M, X = item.model, item.X0
        W = assemble_w(M, X)
        Xh = sla.block_diag(X, np.eye(m))
        D = rng.standard_normal((1000, n + m, n + m))
        yield f"singular_steps N={n + m} 1000 dirs", lambda b, a=(W, Xh, D): _kernels.singular_steps(*a, backend=b)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(args.seed)
    print(f"{'kernel':38s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}  max |diff|")
    for name, fn in cases(rng):
        ref = fn("numpy")
        got = fn("numba")  # warm-up
        t_np = best_of(lambda: fn("numpy"), args.repeat)
        t_nb = best_of(lambda: fn("numba"), args.repeat)
        diff = np.nanmax(np.abs(np.asarray(ref) - np.asarray(got)))
        print(f"{name:38s} {t_np:10.4f} {t_nb:10.4f} {t_np / t_nb:8.2f}  {diff:.1e}")


if __name__ == "__main__":
    main()
