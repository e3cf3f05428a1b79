"""Balanced subset extraction from a cluster tree.

The allocator finds the per-cluster cap n minimising |N - sum_j min(n, s_j)|
by binary search (the sum is monotone in n). Flat sampling applies it once
over the top-level subtrees; hierarchical sampling splits the quota
recursively down to level-1 clusters, where points are drawn at random ("r")
or by distance to their centroid ("c" nearest / "f" furthest).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ClusterTree, SampleSpec, ValidationError
from .kmeans import _as_matrix, _member_slices
from .rng import stream


def allocate(n_target: int, sizes) -> int:
    """Per-cluster cap minimising |N - sum_j min(n, s_j)|; ties take the
    smaller cap, so a tie never over-samples."""
    if n_target < 0:
        raise ValidationError(f"target must be >= 0, got {n_target}")
    sizes = np.asarray(sizes, dtype=np.int64)
    if n_target == 0 or sizes.size == 0:
        return 0

    def achieved(cap: int) -> int:
        return int(np.minimum(sizes, cap).sum())

    best_total = achieved(n_target)
    reachable = min(n_target, best_total)
    lo, hi = 0, n_target
    while lo < hi:
        mid = (lo + hi) // 2
        if achieved(mid) >= reachable:
            hi = mid
        else:
            lo = mid + 1
    if best_total < n_target:
        return lo  # smallest cap reaching the saturated total
    over = achieved(lo) - n_target
    under = n_target - achieved(lo - 1) if lo > 0 else n_target + 1
    return lo - 1 if under <= over else lo


@dataclass(frozen=True)
class SamplePlan:
    """Structure-only quotas: how many points to draw from each cluster of
    ``level`` (1 for hierarchical plans, the top level for flat plans)."""

    level: int
    quotas: np.ndarray
    requested: int

    @property
    def total(self) -> int:
        return int(self.quotas.sum())


def plan_flat(tree: ClusterTree, n_target: int) -> SamplePlan:
    counts = tree.leaf_counts(tree.depth)
    cap = allocate(n_target, counts)
    return SamplePlan(tree.depth, np.minimum(counts, cap), n_target)


def plan_hierarchical(tree: ClusterTree, n_target: int) -> SamplePlan:
    """Split the target down the tree with the allocator at every node."""
    counts = [tree.leaf_counts(t) for t in range(1, tree.depth + 1)]
    top = counts[-1]
    quotas = np.minimum(top, allocate(n_target, top))
    for t in range(tree.depth, 1, -1):
        child_counts = counts[t - 2]
        parent_of = tree.levels[t - 1].assignment
        order, bounds = _member_slices(parent_of, tree.levels[t - 1].k)
        child_quotas = np.zeros(child_counts.shape[0], dtype=np.int64)
        for j in range(quotas.shape[0]):
            q = int(quotas[j])
            if q == 0:
                continue
            children = order[bounds[j] : bounds[j + 1]]
            cap = allocate(q, child_counts[children])
            child_quotas[children] = np.minimum(child_counts[children], cap)
        quotas = child_quotas
    return SamplePlan(1, quotas, n_target)


def _draw(members: np.ndarray, x: np.ndarray, centroid: np.ndarray, quota: int, spec: SampleSpec, level: int, cluster: int) -> np.ndarray:
    if quota >= members.size:
        return members
    if spec.strategy == "r":
        rng = stream(spec.seed, "sample", level, cluster)
        picked = members[rng.permutation(members.size)[:quota]]
        return np.sort(picked)
    diff = x[members].astype(np.float64) - np.asarray(centroid, dtype=np.float64)[None, :]
    d2 = (diff * diff).sum(axis=1)
    key = d2 if spec.strategy == "c" else -d2
    order = np.lexsort((members, key))
    return np.sort(members[order[:quota]])


def _collect(tree: ClusterTree, data, plan: SamplePlan, spec: SampleSpec) -> np.ndarray:
    x = _as_matrix(data)
    if x.shape[0] != tree.n:
        raise ValidationError(f"tree clusters {tree.n} points but dataset has {x.shape[0]}")
    labels = tree.labels_at_level(plan.level).astype(np.uint32)
    order, bounds = _member_slices(labels, tree.levels[plan.level - 1].k)
    centroids = tree.levels[plan.level - 1].centroids
    parts = []
    for j in range(plan.quotas.shape[0]):
        q = int(plan.quotas[j])
        if q == 0:
            continue
        members = order[bounds[j] : bounds[j + 1]]
        parts.append(_draw(members, x, centroids[j], q, spec, plan.level, j))
    if not parts:
        return np.empty(0, dtype=np.uint64)
    out = np.sort(np.concatenate(parts)).astype(np.uint64)
    if np.unique(out).size != out.size:
        raise AssertionError("duplicate indices in sample")
    return out


def flat_sample(tree: ClusterTree, data, spec: SampleSpec) -> np.ndarray:
    """Allocator over top-level subtrees, strategy applied to each subtree's
    full leaf set using the top-level centroid for distances."""
    if spec.mode != "flat":
        raise ValidationError(f"flat_sample requires mode 'flat', got {spec.mode!r}")
    if spec.n_target > tree.n:
        raise ValidationError(f"target {spec.n_target} exceeds pool size {tree.n}")
    return _collect(tree, data, plan_flat(tree, spec.n_target), spec)


def hierarchical_sample(tree: ClusterTree, data, spec: SampleSpec) -> np.ndarray:
    """Top-down quota recursion, points drawn from level-1 clusters."""
    if spec.mode != "hierarchical":
        raise ValidationError(f"hierarchical_sample requires mode 'hierarchical', got {spec.mode!r}")
    if spec.n_target > tree.n:
        raise ValidationError(f"target {spec.n_target} exceeds pool size {tree.n}")
    return _collect(tree, data, plan_hierarchical(tree, spec.n_target), spec)


def sample_tree(tree: ClusterTree, data, spec: SampleSpec) -> np.ndarray:
    if spec.mode == "flat":
        return flat_sample(tree, data, spec)
    return hierarchical_sample(tree, data, spec)
