"""Pure-numpy kernels: the fallback path for HIKM_BACKEND=numpy.

Same contracts as the numba kernels in ``_kernels_nb``; chunk sizes are
functions of the problem shape only, never of the thread count, so repeated
runs are bit-stable.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def _point_chunk(k: int, d: int) -> int:
    # keep the (chunk, k, d) scratch tensor around 32 MB of float64
    return max(64, int(4_000_000 // max(k * d, 1)))


def assign(x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest centroid per point (squared L2, lowest-index tie-break).

    Returns (labels uint32, squared distance float64).
    """
    n, d = x.shape
    k = c.shape[0]
    labels = np.empty(n, dtype=np.uint32)
    sqd = np.empty(n, dtype=np.float64)
    c64 = c.astype(np.float64, copy=False)
    step = _point_chunk(k, d)
    for s in range(0, n, step):
        e = min(s + step, n)
        diff = x[s:e, None, :].astype(np.float64) - c64[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        idx = d2.argmin(axis=1)  # first occurrence: lowest index on ties
        labels[s:e] = idx.astype(np.uint32)
        sqd[s:e] = d2[np.arange(e - s), idx]
    return labels, sqd


def chunk_sums(x: np.ndarray, labels: np.ndarray, k: int, chunk: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-chunk partial sums and counts per cluster, chunk layout fixed."""
    n, d = x.shape
    nch = (n + chunk - 1) // chunk
    partial = np.zeros((nch, k, d), dtype=np.float64)
    counts = np.zeros((nch, k), dtype=np.int64)
    for ci in range(nch):
        s = ci * chunk
        e = min(s + chunk, n)
        lab = labels[s:e].astype(np.int64)
        np.add.at(partial[ci], lab, x[s:e].astype(np.float64))
        counts[ci] = np.bincount(lab, minlength=k)
    return partial, counts


def min_sqdist_update(x: np.ndarray, c: np.ndarray, d2: np.ndarray) -> None:
    """In place: d2[i] = min(d2[i], ||x_i - c||^2)."""
    diff = x.astype(np.float64) - c[None, :].astype(np.float64)
    np.minimum(d2, (diff * diff).sum(axis=1), out=d2)


def kde_sum(points: np.ndarray, grid: np.ndarray, inv_two_b2: float) -> np.ndarray:
    """Sum of Gaussian kernels at each grid row: sum_i exp(-||g - p_i||^2 * inv_two_b2)."""
    m = grid.shape[0]
    out = np.empty(m, dtype=np.float64)
    step = _point_chunk(points.shape[0], points.shape[1])
    for s in range(0, m, step):
        e = min(s + step, m)
        diff = grid[s:e, None, :] - points[None, :, :]
        d2 = (diff * diff).sum(axis=2)
        out[s:e] = np.exp(-d2 * inv_two_b2).sum(axis=1)
    return out


def set_threads(n: int) -> None:
    """No-op: the numpy path is single-threaded by construction."""
