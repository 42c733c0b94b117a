"""Timing comparison of the compiled and numpy pairwise-sHD backends.

Usage: python3 benchmarks/bench_kernels.py [--repeats N]
"""
import argparse
import time

import numpy as np

from ousim.kernels import BACKEND, _pairwise_shd_numpy, pairwise_shd
from ousim.reorder import BitMatrix, reorder_similarity


def _time(fn, *args, repeats=5):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()

    print(f"active backend: {BACKEND}")
    if BACKEND != "cython":
        print("compiled extension not built; timing the numpy path against itself")

    rng = np.random.default_rng(0)
    print(f"\n{'shape':>12} {'compiled':>12} {'numpy':>12} {'speedup':>8}")
    for m, n in [(64, 64), (128, 128), (128, 512), (1024, 512)]:
        bits = rng.integers(0, 2, size=(m, n), dtype=np.uint8)
        t_fast = _time(pairwise_shd, bits, repeats=args.repeats)
        t_slow = _time(_pairwise_shd_numpy, bits, repeats=args.repeats)
        assert np.array_equal(pairwise_shd(bits), _pairwise_shd_numpy(bits))
        print(f"{m}x{n:>6} {t_fast * 1e3:>10.3f}ms {t_slow * 1e3:>10.3f}ms {t_slow / t_fast:>7.2f}x")

    # end-to-end: one full-plane reordering pass
    bits = rng.integers(0, 2, size=(128, 128), dtype=np.uint8)
    t = _time(lambda: reorder_similarity(BitMatrix.from_bits(bits), 7), repeats=args.repeats)
    print(f"\nreorder_similarity 128x128 (h=7): {t * 1e3:.1f} ms [{BACKEND}]")


if __name__ == "__main__":
    main()
