import numpy as np
import pytest

from hikmeans.core import ClusterConfig, ClusterTree, SampleSpec, TreeLevel, ValidationError
from hikmeans.hierarchy import build_hierarchy
from hikmeans.sampling import (
    allocate,
    flat_sample,
    hierarchical_sample,
    plan_hierarchical,
    sample_tree,
)

from .oracles import brute_force_allocate


# ---------------------------------------------------------------------------
# allocate


def test_allocate_exact_fit():
    assert allocate(6, [2, 2, 2]) == 2


def test_allocate_prefers_undersampling_on_tie():
    assert allocate(10, [5, 5, 5]) == 3  # 9 beats 12


def test_allocate_uneven_sizes():
    assert allocate(10, [1, 100]) == 9


def test_allocate_zero():
    assert allocate(0, [3, 4]) == 0


def test_allocate_saturated_pool():
    # every cluster exhausted: the smallest cap reaching the grand total
    assert allocate(100, [3, 4, 5]) == 5


def test_allocate_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        k = int(rng.integers(1, 51))
        sizes = rng.integers(0, 2000, size=k)
        n_target = int(rng.integers(0, 10_001))
        assert allocate(n_target, sizes) == brute_force_allocate(n_target, sizes)


def test_allocate_monotone_total():
    sizes = np.array([7, 1, 19, 4])
    totals = [np.minimum(sizes, n).sum() for n in range(25)]
    assert all(b >= a for a, b in zip(totals, totals[1:]))


# ---------------------------------------------------------------------------
# hand-built trees


def _chain_tree():
    """Every top node has exactly one child; 12 points, 4 clusters."""
    pts = np.array(
        [[-0.1], [0.0], [0.1], [9.9], [10.0], [10.1], [19.9], [20.0], [20.1], [29.9], [30.0], [30.1]],
        dtype=np.float32,
    )
    cents = np.array([[0.0], [10.0], [20.0], [30.0]], dtype=np.float32)
    lab1 = np.repeat(np.arange(4, dtype=np.uint32), 3)
    lab2 = np.arange(4, dtype=np.uint32)
    return pts, ClusterTree((TreeLevel(cents, lab1), TreeLevel(cents, lab2)))


def _two_level_tree():
    """16 points; level-1 sizes [5, 3, 4, 4]; top leaf counts [8, 8]."""
    sizes = [5, 3, 4, 4]
    cents1 = np.array([[0.0], [10.0], [20.0], [30.0]], dtype=np.float32)
    rows = []
    lab1 = []
    for j, s in enumerate(sizes):
        for i in range(s):
            rows.append([10.0 * j + 0.1 * (i + 1)])
            lab1.append(j)
    pts = np.array(rows, dtype=np.float32)
    cents2 = np.array([[5.0], [25.0]], dtype=np.float32)
    lab2 = np.array([0, 0, 1, 1], dtype=np.uint32)
    tree = ClusterTree((TreeLevel(cents1, np.array(lab1, dtype=np.uint32)), TreeLevel(cents2, lab2)))
    return pts, tree


def test_flat_saturation_returns_everything():
    pts, tree = _two_level_tree()
    spec = SampleSpec(16, "flat", "r", seed=0)
    assert np.array_equal(flat_sample(tree, pts, spec), np.arange(16))


def test_hierarchical_saturation_returns_everything():
    pts, tree = _two_level_tree()
    spec = SampleSpec(16, "hierarchical", "c", seed=0)
    assert np.array_equal(hierarchical_sample(tree, pts, spec), np.arange(16))


def test_flat_equal_quota():
    # top leaf counts [5, 5, 5] and N = 10: three from each subtree, total 9
    cents = np.array([[0.0], [10.0], [20.0]], dtype=np.float32)
    lab = np.repeat(np.arange(3, dtype=np.uint32), 5)
    pts = (10.0 * lab[:, None] + 0.1 * np.tile(np.arange(5), 3)[:, None]).astype(np.float32)
    tree = ClusterTree((TreeLevel(cents, lab),))
    out = flat_sample(tree, pts, SampleSpec(10, "flat", "r", seed=1))
    assert out.size == 9
    for j in range(3):
        assert ((out >= 5 * j) & (out < 5 * (j + 1))).sum() == 3


def test_flat_strategy_c_nearest_to_top_centroid():
    pts, tree = _two_level_tree()
    out = flat_sample(tree, pts, SampleSpec(8, "flat", "c", seed=0))
    # quota 4 per top subtree; the 4 leaves nearest each top centroid win
    for j, cent in enumerate(tree.levels[1].centroids[:, 0]):
        members = np.nonzero(tree.labels_at_level(2) == j)[0]
        d = np.abs(pts[members, 0].astype(np.float64) - cent)
        want = np.sort(members[np.lexsort((members, d))[:4]])
        got = out[(out >= members.min()) & (out <= members.max())]
        assert np.array_equal(got, want)


def test_hierarchical_chain_equals_flat():
    pts, tree = _chain_tree()
    for strategy in ("c", "f"):
        f = flat_sample(tree, pts, SampleSpec(8, "flat", strategy, seed=3))
        h = hierarchical_sample(tree, pts, SampleSpec(8, "hierarchical", strategy, seed=3))
        assert np.array_equal(f, h)


def test_hierarchical_two_level_hand_recursion():
    pts, tree = _two_level_tree()
    plan = plan_hierarchical(tree, 8)
    # allocate(8, [8, 8]) -> 4 each; then allocate(4, [5, 3]) -> [2, 2]
    # and allocate(4, [4, 4]) -> [2, 2]
    assert np.array_equal(plan.quotas, [2, 2, 2, 2])
    out = hierarchical_sample(tree, pts, SampleSpec(8, "hierarchical", "r", seed=0))
    assert out.size == 8
    lab1 = tree.labels_at_level(1)
    for j in range(4):
        assert (lab1[out.astype(int)] == j).sum() == 2


def test_hierarchical_strategy_f_furthest():
    pts, tree = _two_level_tree()
    out = hierarchical_sample(tree, pts, SampleSpec(8, "hierarchical", "f", seed=0))
    lab1 = tree.labels_at_level(1)
    for j in range(4):
        members = np.nonzero(lab1 == j)[0]
        quota = (lab1[out.astype(int)] == j).sum()
        d = np.abs(pts[members, 0].astype(np.float64) - tree.levels[0].centroids[j, 0])
        furthest = members[np.lexsort((members, -d))[:quota]]
        chosen = out[np.isin(out.astype(int), members)]
        assert set(chosen.astype(int)) == set(furthest)


def test_strategy_r_deterministic_and_valid():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(400, 2)).astype(np.float32)
    tree = build_hierarchy(x, ClusterConfig(k=(40, 10), m=1, seed=7))
    spec = SampleSpec(120, "hierarchical", "r", seed=99)
    a = hierarchical_sample(tree, x, spec)
    b = hierarchical_sample(tree, x, spec)
    assert np.array_equal(a, b)
    assert np.unique(a).size == a.size
    assert a.max() < 400
    other = hierarchical_sample(tree, x, SampleSpec(120, "hierarchical", "r", seed=100))
    assert not np.array_equal(a, other)


def test_equal_contribution_with_ample_sizes():
    pts, tree = _two_level_tree()
    out = hierarchical_sample(tree, pts, SampleSpec(4, "hierarchical", "r", seed=5))
    lab_top = tree.labels_at_level(2)
    contributions = [int((lab_top[out.astype(int)] == j).sum()) for j in range(2)]
    assert max(contributions) - min(contributions) <= 1


def test_target_larger_than_pool_rejected():
    pts, tree = _two_level_tree()
    with pytest.raises(ValidationError):
        sample_tree(tree, pts, SampleSpec(17, "flat", "r", seed=0))


def test_mode_dispatch():
    pts, tree = _two_level_tree()
    f = sample_tree(tree, pts, SampleSpec(6, "flat", "c", seed=0))
    h = sample_tree(tree, pts, SampleSpec(6, "hierarchical", "c", seed=0))
    assert f.size == 6 and h.size == 6
