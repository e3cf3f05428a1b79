"""Bottom-up hierarchical k-means with resampling-clustering.

Level 1 clusters the data; level t > 1 clusters the centroids of level t-1.
Each level can run m resampling passes: keep the r_t points nearest each
centroid, re-fit k-means on that subset, then re-assign the full level input
to the new centroids. Level 1 skips resampling by default (it dominates the
cost); a config flag enables it everywhere.

RNG streams: the k-means init of level t uses ("init", t, 0) and the s-th
resampling pass uses ("init", t, s), so trees are reproducible from the seed
alone and a 1-level, 0-resampling build equals fit_kmeans bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from . import _backend
from .core import ClusterConfig, ClusterTree, TreeLevel, ValidationError
from .kmeans import _as_matrix, _lloyd_loop, _member_slices, kmeanspp_init, random_init
from .rng import stream


def resample_cluster(members, points, centroid: np.ndarray, r: int) -> np.ndarray:
    """The min(r, |members|) member indices nearest the centroid.

    Squared L2 distance, ties broken by lowest index; result sorted.
    """
    if r < 1:
        raise ValidationError(f"resample count must be >= 1, got {r}")
    m_idx = np.asarray(members, dtype=np.int64)
    if m_idx.size == 0:
        raise ValidationError("cannot resample an empty cluster")
    if r >= m_idx.size:
        return np.sort(m_idx)
    x = _as_matrix(points)
    diff = x[m_idx].astype(np.float64) - np.asarray(centroid, dtype=np.float64)[None, :]
    d2 = (diff * diff).sum(axis=1)
    order = np.lexsort((m_idx, d2))
    return np.sort(m_idx[order[:r]])


def default_resample_count(input_size: int, k: int) -> int:
    """Half the average cluster size, rounded up, at least 1."""
    return max(1, math.ceil(input_size / k / 2))


def build_hierarchy(data, cfg: ClusterConfig) -> ClusterTree:
    """Run k-means per level, with m resampling-clustering passes per level."""
    x = _as_matrix(data)
    n = x.shape[0]

    input_size = n
    for t, kt in enumerate(cfg.k, start=1):
        if kt > input_size:
            raise ValidationError(f"k exceeds input size at level {t}: k={kt}, input={input_size}")
        input_size = kt

    init_fn = kmeanspp_init if cfg.init == "kmeanspp" else random_init
    levels: list[TreeLevel] = []
    inp = x
    for t, kt in enumerate(cfg.k, start=1):
        c0 = init_fn(inp, kt, rng=stream(cfg.seed, "init", t, 0))
        res = _lloyd_loop(inp, c0, cfg.max_iters, cfg.tol)
        centroids, labels = res.centroids, res.assignment

        resample_here = cfg.m > 0 and (t > 1 or cfg.resample_level1)
        if resample_here:
            r_t = cfg.r[t - 1] if cfg.r is not None else default_resample_count(inp.shape[0], kt)
            for step in range(1, cfg.m + 1):
                order, bounds = _member_slices(labels, kt)
                picks = [
                    resample_cluster(order[bounds[j] : bounds[j + 1]], inp, centroids[j], r_t)
                    for j in range(kt)
                ]
                subset = np.concatenate(picks)
                c0 = init_fn(inp[subset], kt, rng=stream(cfg.seed, "init", t, step))
                res = _lloyd_loop(inp[subset], c0, cfg.max_iters, cfg.tol)
                centroids = res.centroids
                labels, _ = _backend.assign(inp, centroids.astype(np.float64))
                # every cluster kept its own resampled members, so none is empty
                counts = np.bincount(labels.astype(np.int64), minlength=kt)
                if (counts == 0).any():
                    raise AssertionError(f"level {t} resampling pass {step} produced an empty cluster")

        levels.append(TreeLevel(centroids, labels))
        inp = centroids
    return ClusterTree(tuple(levels))


def subtree_leaf_count(tree: ClusterTree, level: int, node: int) -> int:
    """Number of original data points reachable downward from node (level, node)."""
    counts = tree.leaf_counts(level)
    if not 0 <= node < counts.shape[0]:
        raise ValidationError(f"node {node} out of range at level {level}")
    return int(counts[node])
