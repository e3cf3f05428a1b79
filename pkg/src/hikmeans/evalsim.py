"""Desk-scale evaluation harness.

Covers the 2-D mixture simulation with KDE and KL-to-uniform, the discrete
power-transform inequality check, the 1-D quantizer-density experiment, the
power-law class resampler, and the cluster-balance diagnostic. Everything is
seeded through named streams; nothing here touches the filesystem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _backend
from .core import ClusterConfig, ClusterTree, EmbeddingDataset, ValidationError
from .hierarchy import build_hierarchy
from .kmeans import _as_matrix, power_kmeans
from .rng import stream

EPS = 1e-12  # density floor applied before any log

OMEGA_2D = ((-3.0, 3.0), (-3.0, 3.0))


# ---------------------------------------------------------------------------
# density containers


@dataclass(frozen=True)
class DensityGrid:
    """A discretised density over an axis-aligned box.

    values has one axis per dimension; sum(values) * cell_volume == 1.
    """

    support: tuple[tuple[float, float], ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "support", tuple((float(a), float(b)) for a, b in self.support))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=np.float64))
        if self.values.ndim != len(self.support):
            raise ValidationError("grid rank does not match support")
        if (self.values < 0).any():
            raise ValidationError("negative density values")
        total = float(self.values.sum()) * self.cell_volume
        if abs(total - 1.0) > 1e-6:
            raise ValidationError(f"grid not normalised: integral {total}")

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for (lo, hi), bins in zip(self.support, self.values.shape):
            vol *= (hi - lo) / bins
        return vol

    @property
    def volume(self) -> float:
        vol = 1.0
        for lo, hi in self.support:
            vol *= hi - lo
        return vol


@dataclass(frozen=True)
class DiscreteDist:
    """A strictly positive probability vector."""

    p: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.p, dtype=np.float64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValidationError("distribution must be a non-empty vector")
        if (arr <= 0).any():
            raise ValidationError("probabilities must be strictly positive on the support")
        if abs(float(arr.sum()) - 1.0) > 1e-9:
            raise ValidationError(f"probabilities sum to {arr.sum()}")
        object.__setattr__(self, "p", arr)

    @classmethod
    def from_weights(cls, w) -> "DiscreteDist":
        w = np.asarray(w, dtype=np.float64)
        return cls(w / w.sum())


# ---------------------------------------------------------------------------
# 2-D simulation (mixture, KDE, KL)


@dataclass(frozen=True)
class MixtureSpec:
    """Three isotropic Gaussians plus a uniform floor, truncated to the box."""

    means: tuple[tuple[float, float], ...] = ((-1.5, -1.5), (0.0, 1.5), (1.5, -1.0))
    sigma: float = 0.35
    weights: tuple[float, ...] = (0.3, 0.3, 0.3)
    uniform_weight: float = 0.1
    box: tuple[tuple[float, float], ...] = OMEGA_2D


DEFAULT_MIXTURE = MixtureSpec()


def gen_mixture_2d(seed: int, n: int = 9000, spec: MixtureSpec = DEFAULT_MIXTURE) -> EmbeddingDataset:
    """Sample n points from the mixture; Gaussian draws outside the box are
    rejected and redrawn, so every point lands inside."""
    rng = stream(seed, "sim.mixture2d")
    weights = np.array(spec.weights + (spec.uniform_weight,), dtype=np.float64)
    weights = weights / weights.sum()
    comp = np.searchsorted(np.cumsum(weights), rng.random(n), side="right")
    comp = np.minimum(comp, weights.size - 1)
    (x0, x1), (y0, y1) = spec.box
    pts = np.empty((n, 2), dtype=np.float64)
    for ci, mean in enumerate(spec.means):
        idx = np.nonzero(comp == ci)[0]
        need = idx
        while need.size:
            draw = rng.normal(loc=mean, scale=spec.sigma, size=(need.size, 2))
            pts[need] = draw
            ok = (
                (draw[:, 0] >= x0) & (draw[:, 0] <= x1) & (draw[:, 1] >= y0) & (draw[:, 1] <= y1)
            )
            need = need[~ok]
    idx = np.nonzero(comp == len(spec.means))[0]
    pts[idx, 0] = rng.uniform(x0, x1, idx.size)
    pts[idx, 1] = rng.uniform(y0, y1, idx.size)
    return EmbeddingDataset(pts.astype(np.float32))


def scott_bandwidth(points: np.ndarray) -> float:
    """Scott's rule with the per-axis stds reduced to one isotropic scale."""
    x = np.asarray(points, dtype=np.float64)
    n, d = x.shape
    sigma = math.sqrt(float(np.mean(x.var(axis=0))))
    return float(n ** (-1.0 / (d + 4)) * sigma)


def grid_centers(support, resolution: int) -> list[np.ndarray]:
    axes = []
    for lo, hi in support:
        w = (hi - lo) / resolution
        axes.append(lo + w * (np.arange(resolution) + 0.5))
    return axes


def kde(points, bandwidth: float | None = None, resolution: int = 100, support=OMEGA_2D) -> DensityGrid:
    """Isotropic Gaussian KDE evaluated at cell centers, renormalised over
    the support."""
    x = _as_matrix(points).astype(np.float64)
    n, d = x.shape
    if n < 1:
        raise ValidationError("kde needs at least one point")
    if len(support) != d:
        raise ValidationError("support rank does not match points")
    for axis, (lo, hi) in enumerate(support):
        if x[:, axis].min() < lo or x[:, axis].max() > hi:
            raise ValidationError(f"points leave the support on axis {axis}")
    bw = scott_bandwidth(x) if bandwidth is None else float(bandwidth)
    if bw <= 0:
        raise ValidationError("bandwidth must be positive")
    axes = grid_centers(support, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    grid = np.stack([m.ravel() for m in mesh], axis=1)
    sums = _backend.kde_sum(x, grid, 1.0 / (2.0 * bw * bw))
    values = sums.reshape([resolution] * d)
    values = values / (values.sum() * (np.prod([(hi - lo) / resolution for lo, hi in support])))
    return DensityGrid(tuple(support), values)


def kl_to_uniform(grid: DensityGrid) -> float:
    """KL(grid || uniform over the support), by the cell sum."""
    u = 1.0 / grid.volume
    p = grid.values
    logs = np.log(np.maximum(p, EPS) / u)
    return float(np.where(p > 0, p * logs, 0.0).sum() * grid.cell_volume)


# ---------------------------------------------------------------------------
# discrete power-transform inequality


@dataclass(frozen=True)
class Lemma1Result:
    kl_q_u: float
    kl_p_u: float
    holds: bool


def _kl_vs_uniform(p: np.ndarray) -> float:
    k = p.size
    return float((p * np.log(np.maximum(p, EPS) * k)).sum())


def lemma1_check(p, t: float) -> Lemma1Result:
    """Flattening a discrete distribution by p -> p^t / Z (0 < t < 1) never
    moves it away from uniform in KL; returns both divergences and the flag."""
    if not 0.0 < t < 1.0:
        raise ValidationError(f"t must be in (0, 1), got {t}")
    dist = p if isinstance(p, DiscreteDist) else DiscreteDist(np.asarray(p, dtype=np.float64))
    q = dist.p**t
    q = q / q.sum()
    kl_q = _kl_vs_uniform(q)
    kl_p = _kl_vs_uniform(dist.p)
    return Lemma1Result(kl_q, kl_p, kl_q <= kl_p + 1e-12)


@dataclass(frozen=True)
class Lemma1Scan:
    trials: int
    violations: int
    max_gap: float  # largest kl_q_u - kl_p_u observed (<= 0 when the bound holds)


def lemma1_scan(trials: int, t_values=(0.1, 0.3, 0.5, 0.7, 0.9), max_support: int = 32, seed: int = 0) -> Lemma1Scan:
    """Randomised counterexample search over (distribution, t) pairs."""
    rng = stream(seed, "sim.lemma")
    violations = 0
    max_gap = -math.inf
    for _ in range(trials):
        k = int(rng.integers(2, max_support + 1))
        p = DiscreteDist.from_weights(rng.random(k) + 1e-6)
        for t in t_values:
            res = lemma1_check(p, t)
            gap = res.kl_q_u - res.kl_p_u
            max_gap = max(max_gap, gap)
            if not res.holds:
                violations += 1
    return Lemma1Scan(trials * len(tuple(t_values)), violations, max_gap)


# ---------------------------------------------------------------------------
# 1-D quantizer-density experiment


@dataclass(frozen=True)
class Density1D:
    """A samplable 1-D density with a normalised pdf on a closed support."""

    name: str
    support: tuple[float, float]
    pdf: Callable[[np.ndarray], np.ndarray]
    sampler: Callable[[np.random.Generator, int], np.ndarray]


def _normalised(pdf_raw, lo: float, hi: float):
    xs = np.linspace(lo, hi, 8193)
    z = float(np.trapezoid(pdf_raw(xs), xs))

    def pdf(x):
        return pdf_raw(np.asarray(x, dtype=np.float64)) / z

    return pdf


def _rejection_sampler(raw_draw, lo: float, hi: float):
    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        out = np.empty(n, dtype=np.float64)
        filled = 0
        while filled < n:
            draw = raw_draw(rng, n - filled)
            keep = draw[(draw >= lo) & (draw <= hi)]
            out[filled : filled + keep.size] = keep
            filled += keep.size
        return out

    return sampler


def truncated_normal_density(lo: float = -3.0, hi: float = 3.0, mu: float = 0.0, sigma: float = 1.0) -> Density1D:
    raw = lambda x: np.exp(-0.5 * ((x - mu) / sigma) ** 2)
    return Density1D(
        "truncnorm",
        (lo, hi),
        _normalised(raw, lo, hi),
        _rejection_sampler(lambda rng, m: rng.normal(mu, sigma, m), lo, hi),
    )


def truncated_bimodal_density(lo: float = -3.0, hi: float = 3.0) -> Density1D:
    m1, m2, s = -1.2, 1.4, 0.5
    raw = lambda x: 0.55 * np.exp(-0.5 * ((x - m1) / s) ** 2) + 0.45 * np.exp(-0.5 * ((x - m2) / s) ** 2)

    def draw(rng: np.random.Generator, m: int) -> np.ndarray:
        pick = rng.random(m) < 0.55
        vals = np.where(pick, rng.normal(m1, s, m), rng.normal(m2, s, m))
        return vals

    return Density1D("bimodal", (lo, hi), _normalised(raw, lo, hi), _rejection_sampler(draw, lo, hi))


def truncated_exponential_density(lo: float = 0.0, hi: float = 4.0, rate: float = 1.0) -> Density1D:
    raw = lambda x: np.exp(-rate * (x - lo))
    span = 1.0 - math.exp(-rate * (hi - lo))

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        return lo - np.log1p(-rng.random(n) * span) / rate

    return Density1D("truncexp", (lo, hi), _normalised(raw, lo, hi), sampler)


def uniform_density_1d(lo: float = -3.0, hi: float = 3.0) -> Density1D:
    return Density1D(
        "uniform",
        (lo, hi),
        _normalised(lambda x: np.ones_like(x), lo, hi),
        lambda rng, n: rng.uniform(lo, hi, n),
    )


DENSITIES_1D = {
    "truncnorm": truncated_normal_density,
    "bimodal": truncated_bimodal_density,
    "truncexp": truncated_exponential_density,
    "uniform": uniform_density_1d,
}


@dataclass(frozen=True)
class ZadorResult:
    edges: np.ndarray
    histogram: np.ndarray  # centroid mass per bin, sums to 1
    kl_vs_p: float
    kl_vs_p13: float
    kl_vs_uniform: float
    converged: bool


def _bin_masses(pdf_vals: np.ndarray, xs: np.ndarray, bins: int) -> np.ndarray:
    """Integrate a tabulated density over equal bins (trapezoid per bin)."""
    per_bin = (xs.size - 1) // bins
    masses = np.empty(bins, dtype=np.float64)
    for b in range(bins):
        sl = slice(b * per_bin, b * per_bin + per_bin + 1)
        masses[b] = np.trapezoid(pdf_vals[sl], xs[sl])
    return masses / masses.sum()


def _discrete_kl(h: np.ndarray, ref: np.ndarray) -> float:
    logs = np.log(np.maximum(h, EPS) / np.maximum(ref, EPS))
    return float(np.where(h > 0, h * logs, 0.0).sum())


def zador_experiment_1d(
    density: Density1D,
    n_samples: int,
    k: int,
    s: float,
    seed: int,
    bins: int = 16,
) -> ZadorResult:
    """Sample the density, quantise with power k-means, and compare the
    centroid histogram to p, to p^(1/3) renormalised, and to uniform."""
    if k >= n_samples:
        raise ValidationError("k must be much smaller than the sample count")
    rng = stream(seed, "sim.zador")
    x = density.sampler(rng, n_samples).astype(np.float32)[:, None]
    res = power_kmeans(x, k, s, seed=seed)
    lo, hi = density.support
    edges = np.linspace(lo, hi, bins + 1)
    counts, _ = np.histogram(res.centroids[:, 0].astype(np.float64), bins=edges)
    hist = counts / counts.sum()

    per_bin = 256
    xs = np.linspace(lo, hi, bins * per_bin + 1)
    pv = density.pdf(xs)
    ref_p = _bin_masses(pv, xs, bins)
    ref_p13 = _bin_masses(pv ** (1.0 / 3.0), xs, bins)
    ref_u = np.full(bins, 1.0 / bins)
    return ZadorResult(
        edges,
        hist,
        _discrete_kl(hist, ref_p),
        _discrete_kl(hist, ref_p13),
        _discrete_kl(hist, ref_u),
        res.converged,
    )


# ---------------------------------------------------------------------------
# power-law class resampler


def imbalance_resample(labels, alpha: float, seed: int) -> np.ndarray:
    """Subset whose class sizes follow a power law: classes get random ranks,
    the rank-i target is floor(|rank-1 class| * i^-alpha) capped at
    availability, and members are drawn uniformly without replacement."""
    if alpha < 0:
        raise ValidationError(f"alpha must be >= 0, got {alpha}")
    lab = np.asarray(labels, dtype=np.int64)
    classes, sizes = np.unique(lab, return_counts=True)
    rng = stream(seed, "sim.imbalance")
    ranked = rng.permutation(classes.size)  # ranked[i] = class position of rank i+1
    scale = float(sizes[ranked[0]])
    keep = []
    for i, pos in enumerate(ranked, start=1):
        target = min(int(math.floor(scale * i ** (-alpha))), int(sizes[pos]))
        members = np.nonzero(lab == classes[pos])[0]
        if target >= members.size:
            keep.append(members)
        else:
            keep.append(np.sort(members[rng.permutation(members.size)[:target]]))
    return np.sort(np.concatenate(keep)).astype(np.int64)


# ---------------------------------------------------------------------------
# cluster-balance diagnostic


@dataclass(frozen=True)
class ClassBalance:
    class_id: int
    class_size: int
    cluster_count: int
    mean_cluster_size: float  # nan when no cluster was attributed


@dataclass(frozen=True)
class BalanceStats:
    rows: tuple[ClassBalance, ...]
    count_slope: float
    count_intercept: float
    size_slope: float
    size_intercept: float


def _line_fit(xs: np.ndarray, ys: np.ndarray) -> tuple[float, float]:
    if xs.size < 2:
        return float("nan"), float("nan")
    slope, intercept = np.polyfit(xs, ys, 1)
    return float(slope), float(intercept)


def balance_stats(tree: ClusterTree, data, labels, knn_k: int = 5) -> BalanceStats:
    """Attribute each top-level centroid to the majority label of its knn_k
    nearest points, then fit class size against cluster count and against
    mean cluster size."""
    if knn_k < 1:
        raise ValidationError("knn_k must be >= 1")
    x = _as_matrix(data)
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape[0] != x.shape[0]:
        raise ValidationError("labels must cover all points")
    centroids = tree.levels[-1].centroids
    leaf = tree.leaf_counts(tree.depth)

    n_label = int(lab.max()) + 1
    attributed = np.empty(centroids.shape[0], dtype=np.int64)
    x64 = x.astype(np.float64)
    for j in range(centroids.shape[0]):
        diff = x64 - centroids[j].astype(np.float64)[None, :]
        d2 = (diff * diff).sum(axis=1)
        kk = min(knn_k, d2.size)
        near = np.argpartition(d2, kk - 1)[:kk]
        votes = np.bincount(lab[near], minlength=n_label)
        attributed[j] = int(votes.argmax())  # first max: lowest label id

    classes, sizes = np.unique(lab, return_counts=True)
    rows = []
    for cid, csize in zip(classes, sizes):
        mine = attributed == cid
        count = int(mine.sum())
        mean_size = float(leaf[mine].mean()) if count else float("nan")
        rows.append(ClassBalance(int(cid), int(csize), count, mean_size))

    xs = np.array([r.class_size for r in rows], dtype=np.float64)
    counts = np.array([r.cluster_count for r in rows], dtype=np.float64)
    count_fit = _line_fit(xs, counts)
    have = np.array([not math.isnan(r.mean_cluster_size) for r in rows])
    size_fit = _line_fit(xs[have], np.array([r.mean_cluster_size for r in rows])[have])
    return BalanceStats(tuple(rows), count_fit[0], count_fit[1], size_fit[0], size_fit[1])


def gen_labeled_pool(
    seed: int,
    n_classes: int = 20,
    alpha: float = 1.0,
    n: int = 20000,
    d: int = 2,
    center_box: float = 2.2,
    sigma: float = 0.25,
) -> tuple[EmbeddingDataset, np.ndarray]:
    """Synthetic labelled pool with power-law class sizes: Gaussian blobs at
    random centers, class i holding a share proportional to (i+1)^-alpha."""
    rng = stream(seed, "sim.pool")
    w = (np.arange(1, n_classes + 1, dtype=np.float64)) ** (-alpha)
    sizes = np.floor(w / w.sum() * n).astype(np.int64)
    sizes = np.maximum(sizes, 2)
    sizes[0] += n - int(sizes.sum())
    centers = rng.uniform(-center_box, center_box, (n_classes, d))
    parts = []
    labels = []
    for c in range(n_classes):
        parts.append(centers[c] + rng.normal(0.0, sigma, (int(sizes[c]), d)))
        labels.append(np.full(int(sizes[c]), c, dtype=np.int64))
    data = EmbeddingDataset(np.concatenate(parts).astype(np.float32))
    return data, np.concatenate(labels)


# ---------------------------------------------------------------------------
# end-to-end 2-D simulation harness


FIG2_SCHEDULES = {
    "1-level": ((300,), 0),
    "2-level": ((1000, 300), 0),
    "3-level": ((3000, 1000, 300), 0),
    "3-level-resample": ((3000, 1000, 300), 10),
}


def simulate_fig2(
    seed: int,
    bandwidth: float = 0.6,
    resolution: int = 100,
    mixture: MixtureSpec = DEFAULT_MIXTURE,
    n_points: int = 9000,
    baseline_points: int = 300,
) -> dict[str, float]:
    """KL-to-uniform of the 300 top-level centroids per clustering
    configuration, plus a uniform-random baseline, all at one bandwidth."""
    data = gen_mixture_2d(seed, n_points, mixture)
    out: dict[str, float] = {}
    for name, (schedule, m) in FIG2_SCHEDULES.items():
        cfg = ClusterConfig(k=schedule, m=m, seed=seed)
        tree = build_hierarchy(data, cfg)
        grid = kde(tree.levels[-1].centroids, bandwidth, resolution, mixture.box)
        out[name] = kl_to_uniform(grid)
    rng = stream(seed, "sim.baseline", 0)
    (x0, x1), (y0, y1) = mixture.box
    ref = np.stack([rng.uniform(x0, x1, baseline_points), rng.uniform(y0, y1, baseline_points)], axis=1)
    grid = kde(ref.astype(np.float32), bandwidth, resolution, mixture.box)
    out["random-baseline"] = kl_to_uniform(grid)
    return out
