#!/usr/bin/env python3
"""Benchmark the compiled k-NN kernel against the NumPy fallback.

The neighbour search is the O(N^2) hot loop of feature extraction; this
script times both implementations over a range of scene sizes and verifies
they return identical indices.

Usage: python benchmarks/bench_kernels.py [--sizes 512,2048,8192] [--k 16]
"""

import argparse
import time

import numpy as np

from mantraseg import kernels


def _time(fn, xyz, k, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn(xyz, k)
        best = min(best, time.perf_counter() - start)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="512,2048,8192")
    parser.add_argument("--k", type=int, default=16)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(0)

    if not kernels.HAVE_EXT:
        print("warning: compiled extension not available, timing fallback twice")

    print(f"{'N':>8} {'ext (ms)':>10} {'numpy (ms)':>11} {'speedup':>8}  identical")
    for n in sizes:
        xyz = rng.uniform(-3, 3, size=(n, 3))
        k = min(args.k, n - 1)
        t_ext = _time(kernels.knn_indices, xyz, k, args.repeats)
        t_py = _time(kernels.knn_indices_py, xyz, k, args.repeats)
        same = np.array_equal(kernels.knn_indices(xyz, k), kernels.knn_indices_py(xyz, k))
        print(
            f"{n:>8} {t_ext * 1e3:>10.2f} {t_py * 1e3:>11.2f} "
            f"{t_py / t_ext:>7.1f}x  {same}"
        )


if __name__ == "__main__":
    main()
