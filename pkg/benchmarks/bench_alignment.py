"""Benchmark the alignment kernels: numba @njit vs the pure-numpy fallback.

Usage: python3 benchmarks/bench_alignment.py [--repeats N]

Token streams are random int32 id arrays, the same representation the
scorer feeds the kernels. The numba kernel is warmed up once so JIT
compilation does not pollute the timings.
"""

import argparse
import time

import numpy as np

from mtas.alignment import (
    HAS_NUMBA,
    levenshtein_counts_numba,
    levenshtein_counts_numpy,
)

SIZES = [(20, 20), (100, 100), (500, 500), (2000, 2000), (2000, 100)]


def run_once(fn, ref, hyp, repeats):
    best = float("inf")
    result = None
    for _ in range(repeats):
        start = time.perf_counter()
        result = fn(ref, hyp)
        best = min(best, time.perf_counter() - start)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    if HAS_NUMBA:
        warm = rng.integers(0, 50, size=10).astype(np.int32)
        levenshtein_counts_numba(warm, warm)

    print(f"{'ref x hyp':>12} | {'numpy':>10} | {'numba':>10} | {'speedup':>8} | agree")
    print("-" * 58)
    for n, m in SIZES:
        ref = rng.integers(0, 50, size=n).astype(np.int32)
        hyp = rng.integers(0, 50, size=m).astype(np.int32)
        t_np, r_np = run_once(levenshtein_counts_numpy, ref, hyp, args.repeats)
        if HAS_NUMBA:
            t_nb, r_nb = run_once(levenshtein_counts_numba, ref, hyp, args.repeats)
            agree = "yes" if r_np == r_nb else "NO"
            print(
                f"{n:>5} x {m:<5}| {t_np * 1e3:>8.2f}ms | {t_nb * 1e3:>8.2f}ms "
                f"| {t_np / t_nb:>7.1f}x | {agree}"
            )
        else:
            print(f"{n:>5} x {m:<5}| {t_np * 1e3:>8.2f}ms | {'n/a':>10} | {'n/a':>8} | -")


if __name__ == "__main__":
    main()
