"""Time the numba and pure-numpy series kernels on the same inputs.

    python benchmarks/bench_kernels.py --sizes 500 2000 8000 --repeat 5

``inv-big`` inverts the Euler product, whose coefficients leave int64 early; both
columns then run the same Python-int path, which bounds what compilation can buy.
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from qident import _kernels
from qident.qfunctions import qpoch


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def inputs(n, rng):
    noise = rng.integers(-50, 51, size=n).astype(np.int64)
    # 1 - t has bounded inverse coefficients, so the int64 route is taken at any n
    geometric = np.zeros(n, dtype=np.int64)
    geometric[:2] = (1, -1)
    # the Euler product's inverse outgrows int64 near n = 400 and runs on Python ints
    euler = _kernels.as_int64_if_small(np.array(qpoch(None, 1, n - 1).coeffs, dtype=object))
    return noise, geometric, euler


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[500, 2000, 8000])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if not _kernels.NUMBA_ENABLED:
        print("numba is disabled (QIDENT_DISABLE_NUMBA set or numba missing); timing numpy only")
    rng = np.random.default_rng(args.seed)
    # compile outside the timed region
    warm = np.ones(8, dtype=np.int64)
    _kernels.convolve(warm, warm, 8)
    _kernels.inverse(warm, 8)

    print(f"{'kernel':10s} {'n':>7s} {'numpy ms':>10s} {'numba ms':>10s} {'speedup':>8s}")
    for n in args.sizes:
        noise, geometric, euler = inputs(n, rng)
        cases = {
            "convolve": lambda flag: _kernels.convolve(noise, euler, n, use_numba=flag),
            "inverse": lambda flag: _kernels.inverse(geometric, n, use_numba=flag),
            "inv-big": lambda flag: _kernels.inverse(euler, n, use_numba=flag),
        }
        for name, run in cases.items():
            t_np = best_of(lambda: run(False), args.repeat)
            if _kernels.NUMBA_ENABLED:
                assert np.array_equal(run(True), run(False))
                t_nb = best_of(lambda: run(True), args.repeat)
                print(f"{name:10s} {n:7d} {t_np * 1e3:10.2f} {t_nb * 1e3:10.2f} {t_np / t_nb:8.1f}x")
            else:
                print(f"{name:10s} {n:7d} {t_np * 1e3:10.2f} {'-':>10s} {'-':>8s}")


if __name__ == "__main__":
    main()
