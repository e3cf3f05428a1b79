#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Usage: python benchmarks/bench_kernels.py [--points 100000] [--dim 2] [--clusters 300]

The numbers justify the default backend: assignment dominates hierarchy
builds, and the compiled kernel is typically 10-50x the numpy path.
"""

import argparse
import time

import numpy as np

from hikmeans import _kernels_np

try:
    from hikmeans import _kernels_nb

    BACKENDS = [("numba", _kernels_nb), ("numpy", _kernels_np)]
except ImportError:
    print("numba unavailable; benchmarking the numpy path only")
    BACKENDS = [("numpy", _kernels_np)]


def _time(fn, repeats=3):
    fn()  # warm (JIT compile / cache load)
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run(n: int, d: int, k: int) -> None:
    rng = np.random.default_rng(0)
    x = rng.normal(size=(n, d)).astype(np.float32)
    c = rng.normal(size=(k, d)).astype(np.float64)
    labels = _kernels_np.assign(x, c)[0]
    grid = rng.normal(size=(2500, d))

    cases = {
        "assign (nearest centroid)": lambda kr: kr.assign(x, c),
        "cluster_sums (chunked)": lambda kr: kr.chunk_sums(x, labels, k, 4096),
        "min_sqdist_update": lambda kr: kr.min_sqdist_update(x, c[0], np.full(n, np.inf)),
        "kde_sum (2500 cells)": lambda kr: kr.kde_sum(x[: min(n, 9000)].astype(np.float64), grid, 0.5),
    }

    print(f"\nn={n} d={d} k={k}")
    print(f"{'kernel':30s} " + " ".join(f"{name:>12s}" for name, _ in BACKENDS) + "   speedup")
    for label, call in cases.items():
        times = [_time(lambda kr=kr: call(kr)) for _, kr in BACKENDS]
        cols = " ".join(f"{t*1e3:>10.1f}ms" for t in times)
        speedup = times[-1] / times[0] if len(times) == 2 else 1.0
        print(f"{label:30s} {cols}   {speedup:6.1f}x")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=100_000)
    ap.add_argument("--dim", type=int, default=2)
    ap.add_argument("--clusters", type=int, default=300)
    args = ap.parse_args()
    run(args.points, args.dim, args.clusters)


if __name__ == "__main__":
    main()
