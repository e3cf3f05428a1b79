import numpy as np
import pytest

from hikmeans import _backend
from hikmeans.core import DegenerateDataError, ValidationError
from hikmeans.kmeans import (
    assign,
    distortion,
    fit_kmeans,
    kmeanspp_init,
    lloyd,
    power_kmeans,
    random_init,
)

from .oracles import brute_force_assign


def _blobs(seed=42, n_per=20):
    rng = np.random.default_rng(seed)
    a = rng.normal((-5.0, 0.0), 0.3, (n_per, 2))
    b = rng.normal((5.0, 0.0), 0.3, (n_per, 2))
    return np.vstack([a, b]).astype(np.float32)


# ---------------------------------------------------------------------------
# k-means++


def test_kmeanspp_saturation_k_equals_n():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(12, 3)).astype(np.float32)
    c = kmeanspp_init(x, 12, seed=1)
    assert np.array_equal(np.sort(c, axis=0), np.sort(x, axis=0))


def test_kmeanspp_saturation_with_duplicates():
    # duplicate rows get zero D^2 mass but must still be picked to reach k = n
    x = np.array([[0.0], [0.0], [1.0], [1.0]], dtype=np.float32)
    c = kmeanspp_init(x, 4, seed=3)
    assert np.array_equal(np.sort(c, axis=0), np.sort(x, axis=0))


def test_kmeanspp_k1_is_a_data_row():
    x = _blobs()
    c = kmeanspp_init(x, 1, seed=7)
    assert any(np.array_equal(c[0], row) for row in x)


def test_kmeanspp_argument_errors():
    x = _blobs()
    with pytest.raises(ValidationError):
        kmeanspp_init(x, x.shape[0] + 1, seed=0)
    same = np.ones((5, 2), dtype=np.float32)
    with pytest.raises(DegenerateDataError):
        kmeanspp_init(same, 2, seed=0)


def test_kmeanspp_covers_separated_blobs():
    # Monte-Carlo oracle over seeds: both blobs get a centroid in >= 99%
    x = _blobs()
    hits = 0
    for seed in range(1000):
        c = kmeanspp_init(x, 2, seed=seed)
        hits += np.sign(c[0, 0]) != np.sign(c[1, 0])
    assert hits >= 990


def test_random_init_distinct_rows():
    x = _blobs()
    c = random_init(x, 10, seed=0)
    assert np.unique(c, axis=0).shape[0] == 10


# ---------------------------------------------------------------------------
# lloyd


def test_lloyd_toy_beats_intuitive_centroids(toy_1d):
    c123 = np.array([[1.0], [2.0], [3.0]], dtype=np.float32)
    d123 = distortion(toy_1d, c123, assign(toy_1d, c123))
    assert abs(d123 - 16.7) < 0.1
    res = fit_kmeans(toy_1d, 3, seed=0)
    assert res.distortion < 16.7
    assert res.distortion < d123


def test_lloyd_k1_closed_form():
    x = _blobs()
    res = lloyd(x, x[:1].copy(), max_iters=50, tol=0.0)
    mean = x.astype(np.float64).mean(axis=0)
    assert np.allclose(res.centroids[0], mean, atol=1e-6)
    want = float(((x.astype(np.float64) - mean) ** 2).sum())
    assert res.distortion == pytest.approx(want, rel=1e-6)


def test_lloyd_k_equals_n_zero_distortion():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(9, 2)).astype(np.float32)
    res = fit_kmeans(x, 9, seed=0)
    assert res.distortion == 0.0
    assert np.unique(res.assignment).size == 9


def test_lloyd_fixpoint_invariants():
    rng = np.random.default_rng(11)
    x = rng.normal(size=(400, 3)).astype(np.float32)
    res = fit_kmeans(x, 7, seed=5, tol=0.0, max_iters=500)
    assert res.converged
    # re-running assignment changes nothing
    assert np.array_equal(assign(x, res.centroids), res.assignment)
    # each centroid is the mean of its members (1e-5 relative)
    for j in range(7):
        members = x[res.assignment == j].astype(np.float64)
        assert members.shape[0] >= 1
        np.testing.assert_allclose(res.centroids[j], members.mean(axis=0), rtol=1e-5, atol=1e-7)


def test_lloyd_monotone_distortion_sequence():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(300, 2)).astype(np.float32)
    c0 = random_init(x, 10, seed=4)
    seen = []
    c = c0
    for _ in range(6):  # manual Lloyd steps through the public ops
        lab = assign(x, c)
        seen.append(distortion(x, c, lab))
        sums = np.zeros((10, x.shape[1]))
        np.add.at(sums, lab.astype(int), x.astype(np.float64))
        counts = np.bincount(lab.astype(int), minlength=10)
        c = np.where(counts[:, None] > 0, sums / np.maximum(counts, 1)[:, None], c).astype(np.float32)
    assert all(b <= a * (1 + 1e-9) for a, b in zip(seen, seen[1:]))


def test_threads_do_not_change_results():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(3000, 5)).astype(np.float32)
    _backend.set_threads(1)
    r1 = fit_kmeans(x, 24, seed=3)
    _backend.set_threads(8)
    r2 = fit_kmeans(x, 24, seed=3)
    assert np.array_equal(r1.centroids, r2.centroids)
    assert np.array_equal(r1.assignment, r2.assignment)
    assert r1.distortion == r2.distortion


def test_kmeanspp_beats_random_init_median(toy_1d):
    dpp = [fit_kmeans(toy_1d, 3, seed=s).distortion for s in range(50)]
    drand = [fit_kmeans(toy_1d, 3, init="random", seed=s).distortion for s in range(50)]
    assert np.median(dpp) <= np.median(drand)


def test_empty_cluster_repair_keeps_k():
    # a crowded init empties one cluster mid-run; repair must repopulate it
    x = np.array([[0.0], [0.5], [1.0], [100.0]], dtype=np.float32)
    bad_init = np.array([[0.0], [0.1], [0.2]], dtype=np.float32)
    res = lloyd(x, bad_init)
    assert np.unique(res.assignment).size == 3
    assert np.bincount(res.assignment.astype(int), minlength=3).min() >= 1


# ---------------------------------------------------------------------------
# assign / distortion


def test_assign_tie_break_lowest_index():
    centroids = np.array([[-1.0, 0.0], [5.0, 5.0], [1.0, 0.0]], dtype=np.float32)
    point = np.array([[0.0, 0.0]], dtype=np.float32)  # equidistant to 0 and 2
    assert assign(point, centroids)[0] == 0


def test_assign_identity_when_centroids_are_data():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(30, 4)).astype(np.float32)
    assert np.array_equal(assign(x, x), np.arange(30))


def test_assign_grid_splits_by_sign():
    xs, ys = np.meshgrid(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9))
    pts = np.stack([xs.ravel(), ys.ravel()], axis=1).astype(np.float32)
    pts = pts[pts[:, 0] != 0]  # drop the tie column
    centroids = np.array([[-1.0, 0.0], [1.0, 0.0]], dtype=np.float32)
    lab = assign(pts, centroids)
    assert np.array_equal(lab, (pts[:, 0] > 0).astype(np.uint32))
    assert np.array_equal(lab, brute_force_assign(pts, centroids))


def test_assign_dimension_mismatch():
    with pytest.raises(ValidationError):
        assign(np.ones((3, 2), dtype=np.float32), np.ones((2, 3), dtype=np.float32))


def test_distortion_closed_forms(toy_1d):
    rng = np.random.default_rng(9)
    x = rng.normal(size=(50, 3)).astype(np.float32)
    mean = x.astype(np.float64).mean(axis=0, keepdims=True)
    lab = np.zeros(50, dtype=np.uint32)
    got = distortion(x, mean, lab)
    want = float(((x.astype(np.float64) - mean) ** 2).sum())
    assert got == pytest.approx(want, rel=1e-9)

    c123 = np.array([[1.0], [2.0], [3.0]], dtype=np.float32)
    d = distortion(toy_1d, c123, assign(toy_1d, c123))
    assert d == pytest.approx(16.7, abs=0.1)

    one = np.array([[2.0]], dtype=np.float32)
    c = np.array([[0.0]], dtype=np.float32)
    assert distortion(one, c, np.zeros(1, dtype=np.uint32), s=4) == pytest.approx(16.0)


def test_distortion_validation():
    x = np.ones((3, 2), dtype=np.float32)
    c = np.ones((2, 2), dtype=np.float32)
    with pytest.raises(ValidationError):
        distortion(x, c, np.array([0, 1, 5]))
    with pytest.raises(ValidationError):
        distortion(x, c, np.zeros(3, dtype=int), s=1.5)


# ---------------------------------------------------------------------------
# power k-means


def test_power_s2_reduces_to_lloyd():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(500, 2)).astype(np.float32)
    a = fit_kmeans(x, 6, seed=9)
    b = power_kmeans(x, 6, 2.0, seed=9)
    assert np.array_equal(a.centroids, b.centroids)
    assert np.array_equal(a.assignment, b.assignment)
    assert a.distortion == b.distortion


def test_power_rejects_small_exponent():
    with pytest.raises(ValidationError):
        power_kmeans(np.ones((4, 1), dtype=np.float32), 2, 1.0, seed=0)


def test_power_objective_non_increasing_outer_loop():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(2000, 1)).astype(np.float32)
    res = power_kmeans(x, 8, 4.0, seed=2, max_iters=40)
    # final state is self-consistent under the s-distortion
    d = distortion(x, res.centroids, res.assignment, s=4.0)
    assert d == pytest.approx(res.distortion, rel=1e-9)
