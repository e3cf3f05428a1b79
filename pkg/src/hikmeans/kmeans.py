"""Flat k-means: k-means++ and random init, Lloyd iterations, and the
power-distortion variant that replaces the mean update with gradient descent.

Distances are squared L2 with lowest-index tie-breaks everywhere; all
reductions run through the chunk-ordered backend kernels, so results do not
depend on the worker count. Centroids are returned as float32 and the stored
assignment is always the argmin against those stored centroids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .core import DegenerateDataError, EmbeddingDataset, ValidationError
from .rng import stream


@dataclass(frozen=True)
class KMeansResult:
    centroids: np.ndarray  # (k, d) float32
    assignment: np.ndarray  # (n,) uint32
    distortion: float
    iters_run: int
    converged: bool


@dataclass(frozen=True)
class PowerDescentConfig:
    """Gradient-descent knobs for the s > 2 centroid step.

    Step size is step_scale / (s * sum_i ||x_i - mean||^(s-2)); the sum grows
    with the cluster size, which keeps the summed gradient step stable.
    """

    steps: int = 50
    step_scale: float = 0.1


def _as_matrix(data) -> np.ndarray:
    if isinstance(data, EmbeddingDataset):
        return data.data
    arr = np.ascontiguousarray(data, dtype=np.float32)
    if arr.ndim != 2:
        raise ValidationError(f"expected an (n, d) matrix, got shape {arr.shape}")
    return arr


def _power_total(sqd: np.ndarray, s: float) -> float:
    if s == 2.0:
        return float(sqd.sum())
    return float((sqd ** (s / 2.0)).sum())


# ---------------------------------------------------------------------------
# initialisation


def kmeanspp_init(data, k: int, seed: int = 0, rng: np.random.Generator | None = None) -> np.ndarray:
    """k distinct data rows via D^2 sampling.

    First row uniform; each next row with probability proportional to its
    squared distance to the nearest already-chosen row. Rows whose distance
    mass is zero (duplicates of chosen rows) can still be forced in by a
    uniform draw when no mass is left, so k = n always saturates.
    """
    x = _as_matrix(data)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    if k > 1 and not (x != x[0]).any():
        raise DegenerateDataError("all points identical; cannot place k > 1 distinct centroids")
    if rng is None:
        rng = stream(seed, "init", 1, 0)

    chosen = np.empty(k, dtype=np.int64)
    avail = np.ones(n, dtype=bool)
    d2 = np.full(n, np.inf, dtype=np.float64)

    idx = int(rng.integers(n))
    chosen[0] = idx
    avail[idx] = False
    _backend.min_sqdist_update(x, x[idx].astype(np.float64), d2)

    for t in range(1, k):
        w = np.where(avail, d2, 0.0)
        total = float(w.sum())
        if total > 0.0:
            u = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(w), u, side="right"))
            idx = min(idx, n - 1)
        else:
            remaining = np.nonzero(avail)[0]
            idx = int(remaining[rng.integers(remaining.size)])
        chosen[t] = idx
        avail[idx] = False
        _backend.min_sqdist_update(x, x[idx].astype(np.float64), d2)
    return x[chosen].copy()


def random_init(data, k: int, seed: int = 0, rng: np.random.Generator | None = None) -> np.ndarray:
    """k distinct data rows chosen uniformly."""
    x = _as_matrix(data)
    n = x.shape[0]
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    if rng is None:
        rng = stream(seed, "init", 1, 0)
    rows = rng.permutation(n)[:k]
    return x[rows].copy()


_INITS = {"kmeanspp": kmeanspp_init, "random": random_init}


# ---------------------------------------------------------------------------
# assignment and distortion


def assign(data, centroids: np.ndarray) -> np.ndarray:
    """Nearest-centroid index per point (squared L2, ties to lowest index)."""
    x = _as_matrix(data)
    c = np.asarray(centroids)
    if c.ndim != 2 or c.shape[1] != x.shape[1]:
        raise ValidationError(f"centroid shape {c.shape} does not match data dimension {x.shape[1]}")
    labels, _ = _backend.assign(x, c.astype(np.float64))
    return labels


def distortion(data, centroids: np.ndarray, assignment: np.ndarray, s: float = 2.0) -> float:
    """Sum over points of ||x - c_assigned||^s."""
    if s < 2.0:
        raise ValidationError(f"distortion exponent must be >= 2, got {s}")
    x = _as_matrix(data).astype(np.float64)
    c = np.asarray(centroids, dtype=np.float64)
    lab = np.asarray(assignment, dtype=np.int64)
    if lab.shape[0] != x.shape[0]:
        raise ValidationError("assignment length does not match data")
    if lab.size and (lab.min() < 0 or lab.max() >= c.shape[0]):
        raise ValidationError("assignment index out of range")
    diff = x - c[lab]
    sqd = (diff * diff).sum(axis=1)
    return _power_total(sqd, s)


# ---------------------------------------------------------------------------
# Lloyd loop (shared by the s = 2 and power variants)


def _member_slices(labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Stable order of point ids grouped by cluster, plus group boundaries."""
    order = np.argsort(labels, kind="stable")
    counts = np.bincount(labels.astype(np.int64), minlength=k)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    return order, bounds


def _power_centroid(xj: np.ndarray, s: float, cfg: PowerDescentConfig) -> np.ndarray:
    """Minimise sum ||x - c||^s over one cluster by fixed-step descent from the mean."""
    c0 = xj.mean(axis=0)
    d2 = ((xj - c0) ** 2).sum(axis=1)
    obj0 = float((d2 ** (s / 2.0)).sum())
    denom = s * float((d2 ** ((s - 2.0) / 2.0)).sum())
    if denom <= 0.0:
        return c0
    step = cfg.step_scale / denom
    c = c0.copy()
    for _ in range(cfg.steps):
        diff = c - xj
        d2 = (diff * diff).sum(axis=1)
        w = d2 ** ((s - 2.0) / 2.0)
        grad = s * (w[:, None] * diff).sum(axis=0)
        c = c - step * grad
    d2 = ((xj - c) ** 2).sum(axis=1)
    if float((d2 ** (s / 2.0)).sum()) > obj0:
        return c0  # descent made things worse; keep the mean
    return c


def _repair_empty(x: np.ndarray, centroids: np.ndarray, labels: np.ndarray, counts: np.ndarray) -> None:
    """Give each empty cluster the point farthest from its current centroid."""
    far = x.astype(np.float64) - centroids[labels.astype(np.int64)]
    far = (far * far).sum(axis=1)
    for j in np.nonzero(counts == 0)[0]:
        p = int(np.argmax(far))
        centroids[j] = x[p]
        labels[p] = j
        far[p] = -1.0


def _lloyd_loop(
    x: np.ndarray,
    init_centroids: np.ndarray,
    max_iters: int,
    tol: float,
    s: float = 2.0,
    descent: PowerDescentConfig | None = None,
) -> KMeansResult:
    n, d = x.shape
    c = np.asarray(init_centroids, dtype=np.float64).copy()
    k = c.shape[0]
    if k > n:
        raise ValidationError(f"k={k} exceeds input size {n}")
    if not np.isfinite(c).all():
        raise ValidationError("init centroids must be finite")
    descent = descent or PowerDescentConfig()

    labels, sqd = _backend.assign(x, c)
    dist = _power_total(sqd, s)
    iters = 0
    converged = False
    x64 = None  # lazily materialised for the power update

    while iters < max_iters:
        sums, counts = _backend.cluster_sums(x, labels, k)
        c_new = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], c)
        if s != 2.0:
            if x64 is None:
                x64 = x.astype(np.float64)
            order, bounds = _member_slices(labels, k)
            for j in range(k):
                if counts[j] > 0:
                    c_new[j] = _power_centroid(x64[order[bounds[j] : bounds[j + 1]]], s, descent)
        if (counts == 0).any():
            labels = labels.copy()
            _repair_empty(x, c_new, labels, counts)

        new_labels, new_sqd = _backend.assign(x, c_new)
        new_dist = _power_total(new_sqd, s)
        iters += 1

        if new_dist > dist * (1.0 + 1e-9) + 1e-12:
            if s == 2.0:
                raise AssertionError(f"distortion increased: {dist} -> {new_dist}")
            converged = False  # divergent descent; stop at the previous state
            break

        unchanged = np.array_equal(new_labels, labels)
        improvement = (dist - new_dist) / dist if dist > 0 else 0.0
        c, labels, dist = c_new, new_labels, new_dist
        if unchanged or improvement < tol:
            converged = True
            break

    # freeze to the stored precision and make the result self-consistent
    c32 = c.astype(np.float32)
    for _ in range(k + 1):
        labels, sqd = _backend.assign(x, c32.astype(np.float64))
        counts = np.bincount(labels.astype(np.int64), minlength=k)
        if (counts > 0).all():
            break
        work = c32.astype(np.float64)
        labels = labels.copy()
        _repair_empty(x, work, labels, counts)
        c32 = work.astype(np.float32)
    else:
        raise DegenerateDataError("could not populate all clusters")
    dist = _power_total(sqd, s)
    return KMeansResult(c32, labels.astype(np.uint32), dist, iters, converged)


# ---------------------------------------------------------------------------
# public entry points


def lloyd(data, init_centroids: np.ndarray, max_iters: int = 100, tol: float = 1e-4) -> KMeansResult:
    """Alternate nearest-centroid assignment and mean updates until the
    relative distortion improvement drops below tol or max_iters is hit."""
    return _lloyd_loop(_as_matrix(data), init_centroids, max_iters, tol, s=2.0)


def fit_kmeans(
    data,
    k: int,
    init: str = "kmeanspp",
    seed: int = 0,
    max_iters: int = 100,
    tol: float = 1e-4,
    rng: np.random.Generator | None = None,
) -> KMeansResult:
    """Initialise (stream ("init", 1, 0) unless an rng is supplied) and run Lloyd."""
    x = _as_matrix(data)
    try:
        init_fn = _INITS[init]
    except KeyError:
        raise ValidationError(f"unknown init method {init!r}") from None
    c0 = init_fn(x, k, seed=seed, rng=rng)
    return _lloyd_loop(x, c0, max_iters, tol, s=2.0)


def power_kmeans(
    data,
    k: int,
    s: float,
    seed: int = 0,
    init: str = "kmeanspp",
    max_iters: int = 100,
    tol: float = 1e-4,
    descent: PowerDescentConfig | None = None,
) -> KMeansResult:
    """k-means under distortion ||x - c||^s.

    Assignment is unchanged from squared L2 (the nearest centroid is the
    same point set), so s = 2 reduces exactly to fit_kmeans; for s > 2 the
    centroid step is gradient descent started at the cluster mean.
    """
    if s < 2.0:
        raise ValidationError(f"distortion exponent must be >= 2, got {s}")
    x = _as_matrix(data)
    try:
        init_fn = _INITS[init]
    except KeyError:
        raise ValidationError(f"unknown init method {init!r}") from None
    c0 = init_fn(x, k, seed=seed)
    return _lloyd_loop(x, c0, max_iters, tol, s=float(s), descent=descent)
