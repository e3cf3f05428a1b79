"""Numba-compiled kernels: the default backend.

Parallel loops are over points, grid rows, or fixed-size chunks; anything
that reduces floating-point values does so per chunk, and the caller adds
the chunk partials in a fixed order. Results are therefore independent of
the worker count.
"""

from __future__ import annotations

import numpy as np
import numba
from numba import njit, prange, set_num_threads

# prefer omp: the bundled TBB is too old and warns on every import
numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

BACKEND = "numba"


@njit(parallel=True, cache=True)
def _assign_kernel(x, c):
    n, d = x.shape
    k = c.shape[0]
    labels = np.empty(n, dtype=np.uint32)
    sqd = np.empty(n, dtype=np.float64)
    for i in prange(n):
        best = np.inf
        bj = 0
        for j in range(k):
            acc = 0.0
            for l in range(d):
                diff = np.float64(x[i, l]) - c[j, l]
                acc += diff * diff
            if acc < best:
                best = acc
                bj = j
        labels[i] = bj
        sqd[i] = best
    return labels, sqd


def assign(x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (squared L2, lowest-index tie-break)."""
    return _assign_kernel(x, c.astype(np.float64, copy=False))


@njit(parallel=True, cache=True)
def _chunk_sums_kernel(x, labels, k, chunk):
    n, d = x.shape
    nch = (n + chunk - 1) // chunk
    partial = np.zeros((nch, k, d), dtype=np.float64)
    counts = np.zeros((nch, k), dtype=np.int64)
    for ci in prange(nch):
        s = ci * chunk
        e = min(s + chunk, n)
        for i in range(s, e):
            j = labels[i]
            counts[ci, j] += 1
            for l in range(d):
                partial[ci, j, l] += np.float64(x[i, l])
    return partial, counts


def chunk_sums(x: np.ndarray, labels: np.ndarray, k: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-chunk partial sums and counts per cluster, chunk layout fixed."""
    return _chunk_sums_kernel(x, labels, k, chunk)


@njit(parallel=True, cache=True)
def _min_sqdist_kernel(x, c, d2):
    n, d = x.shape
    for i in prange(n):
        acc = 0.0
        for l in range(d):
            diff = np.float64(x[i, l]) - c[l]
            acc += diff * diff
        if acc < d2[i]:
            d2[i] = acc


def min_sqdist_update(x: np.ndarray, c: np.ndarray, d2: np.ndarray) -> None:
    """In place: d2[i] = min(d2[i], ||x_i - c||^2)."""
    _min_sqdist_kernel(x, c.astype(np.float64, copy=False), d2)


@njit(parallel=True, cache=True)
def _kde_kernel(points, grid, inv_two_b2):
    m, d = grid.shape
    n = points.shape[0]
    out = np.empty(m, dtype=np.float64)
    for a in prange(m):
        s = 0.0
        for i in range(n):
            acc = 0.0
            for l in range(d):
                diff = grid[a, l] - points[i, l]
                acc += diff * diff
            s += np.exp(-acc * inv_two_b2)
        out[a] = s
    return out


def kde_sum(points: np.ndarray, grid: np.ndarray, inv_two_b2: float) -> np.ndarray:
    """Sum of Gaussian kernels at each grid row."""
    return _kde_kernel(
        points.astype(np.float64, copy=False),
        grid.astype(np.float64, copy=False),
        float(inv_two_b2),
    )


def set_threads(n: int) -> None:
    # clamp to the detected core budget; more threads than cores adds nothing
    set_num_threads(max(1, min(int(n), numba.config.NUMBA_NUM_THREADS)))
