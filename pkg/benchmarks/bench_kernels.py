"""Benchmark the numba kernels against their pure-numpy fallbacks.

Run from the repository root:

    python benchmarks/bench_kernels.py

Both implementations are called directly (no env-flag juggling); the
numba path is warmed once so compilation time is reported separately
from steady-state throughput.
"""

import time

import numpy as np

from rankcomp import kernels


def _time(fn, *args, repeat=3):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_grid_screen():
    rng = np.random.default_rng(0)
    g = 12
    m, n = 4, 2
    S = 1820
    strat = rng.integers(0, g + 1, size=(S, m)).astype(np.float64)
    sums = strat.sum(axis=1)
    strat[sums > g] *= (g / sums[sums > g])[:, None]
    strat /= g
    P = 400_000
    prof = rng.integers(0, S, size=(P, n))
    peak = 1.0 / 3.0

    if kernels.HAVE_NUMBA:
        t0 = time.perf_counter()
        kernels.grid_screen_numba(strat, prof[:128], peak)
        compile_s = time.perf_counter() - t0
        t_numba = _time(kernels.grid_screen_numba, strat, prof, peak)
    else:
        compile_s = float("nan")
        t_numba = float("nan")
    t_numpy = _time(kernels.grid_screen_numpy, strat, prof, peak)
    print(f"grid_screen  ({P} profiles, n={n}, m={m})")
    print(f"  numba : {t_numba:8.3f} s   (first-call compile {compile_s:.2f} s)")
    print(f"  numpy : {t_numpy:8.3f} s")
    if kernels.HAVE_NUMBA:
        print(f"  speedup: {t_numpy / t_numba:5.1f}x")


def bench_logreg():
    rng = np.random.default_rng(1)
    N, D = 2500, 27
    X = rng.random(size=(N, D))
    y = (rng.random(N) < 0.5).astype(np.float64)
    alpha, step, iters = 1e-4, 0.05, 600

    if kernels.HAVE_NUMBA:
        t0 = time.perf_counter()
        kernels.logreg_fit_numba(X[:64], y[:64], alpha, step, 10)
        compile_s = time.perf_counter() - t0
        t_numba = _time(kernels.logreg_fit_numba, X, y, alpha, step, iters)
    else:
        compile_s = float("nan")
        t_numba = float("nan")
    t_numpy = _time(kernels.logreg_fit_numpy, X, y, alpha, step, iters)
    print(f"logreg_fit   (N={N}, D={D}, {iters} iterations)")
    print(f"  numba : {t_numba:8.3f} s   (first-call compile {compile_s:.2f} s)")
    print(f"  numpy : {t_numpy:8.3f} s")
    if kernels.HAVE_NUMBA:
        print(f"  speedup: {t_numpy / t_numba:5.1f}x")


if __name__ == "__main__":
    print(f"numba available: {kernels.HAVE_NUMBA}")
    print(f"active backend : {kernels.active_backend()}")
    print()
    bench_grid_screen()
    print()
    bench_logreg()
