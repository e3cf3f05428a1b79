"""Command-line surface: cluster, sample, simulate, zador, kl-check, stats.

Every command writes its outputs atomically, drops a .manifest.json next to
the primary output, and is bit-reproducible from that manifest. Exit codes:
0 success, 2 argument or config validation, 3 data format, 4 tree/data
mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import os
import sys
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import __version__, _backend
from .config import ConfigError, load_cluster_config, load_simulate_config
from .core import (
    DataError,
    FormatError,
    HikmeansError,
    SampleSpec,
    ValidationError,
    atomic_write_text,
    load_dataset,
    load_tree,
    save_indices,
    save_tree,
)
from .evalsim import (
    DEFAULT_MIXTURE,
    DENSITIES_1D,
    balance_stats,
    lemma1_scan,
    simulate_fig2,
    zador_experiment_1d,
)
from .hierarchy import build_hierarchy
from .manifest import RunManifest
from .sampling import sample_tree
from .svg import bar_svg, histogram_svg, scatter_svg

_ENV_THREADS = "HIKM_THREADS"

_MODES = {"flat": "flat", "hier": "hierarchical"}


class MismatchError(HikmeansError):
    """Tree and dataset disagree on n or d."""


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _tree_files(path: Path, depth: int) -> list[str]:
    names = [str(path)]
    for t in range(1, depth + 1):
        names.append(str(path.with_name(f"{path.name}.L{t:02d}.centroids.f32")))
        names.append(str(path.with_name(f"{path.name}.L{t:02d}.assign.u32")))
    return names


def _svg_path(out: Path) -> Path:
    return out.with_suffix(".svg")


# ---------------------------------------------------------------------------
# commands


def cmd_cluster(args) -> int:
    t0 = time.perf_counter()
    cfg = load_cluster_config(args.config, seed_override=args.seed)
    data = load_dataset(args.data)
    tree = build_hierarchy(data, cfg)
    out = Path(args.out)
    save_tree(tree, out)
    manifest = RunManifest("cluster", asdict(cfg), cfg.seed)
    manifest.add_input(args.config)
    manifest.add_input(args.data)
    manifest.outputs = _tree_files(out, tree.depth)
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    sizes = " -> ".join(str(lv.k) for lv in tree.levels)
    print(f"wrote {out} ({tree.n} points, levels {sizes})")
    return 0


def cmd_sample(args) -> int:
    t0 = time.perf_counter()
    tree = load_tree(args.tree)
    data = load_dataset(args.data)
    if tree.n != data.n or tree.d != data.d:
        raise MismatchError(
            f"tree is over {tree.n}x{tree.d} but dataset is {data.n}x{data.d}"
        )
    spec = SampleSpec(args.target, _MODES[args.mode], args.strategy, args.seed)
    idx = sample_tree(tree, data, spec)
    out = Path(args.out)
    save_indices(idx, out, fmt=args.index_format)
    manifest = RunManifest(
        "sample",
        {"target": args.target, "mode": spec.mode, "strategy": spec.strategy, "index_format": args.index_format},
        args.seed,
    )
    manifest.add_input(args.tree)
    manifest.add_input(args.data)
    manifest.outputs = [str(out)]
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    print(f"wrote {out}: {idx.size} indices (requested {args.target})")
    return 0


def cmd_simulate(args) -> int:
    t0 = time.perf_counter()
    mixture, bandwidth, resolution = DEFAULT_MIXTURE, None, None
    if args.config:
        mixture, bandwidth, resolution = load_simulate_config(args.config)
    bandwidth = args.bandwidth if args.bandwidth is not None else (bandwidth or 0.6)
    resolution = args.resolution if args.resolution is not None else (resolution or 100)
    rows_by_name = simulate_fig2(args.seed, bandwidth=bandwidth, resolution=resolution, mixture=mixture)
    order = ["1-level", "2-level", "3-level", "3-level-resample", "random-baseline"]
    rows = [[name, args.seed, float(rows_by_name[name])] for name in order]
    out = Path(args.out)
    atomic_write_text(out, _csv_text(["config_name", "seed", "kl_to_uniform"], rows))
    outputs = [str(out)]
    if args.svg:
        fig = bar_svg(order, [rows_by_name[n] for n in order], title="KL to uniform per configuration", ylabel="KL")
        atomic_write_text(_svg_path(out), fig)
        outputs.append(str(_svg_path(out)))
    manifest = RunManifest(
        "simulate",
        {"bandwidth": bandwidth, "resolution": resolution, "mixture": asdict(mixture)},
        args.seed,
    )
    if args.config:
        manifest.add_input(args.config)
    manifest.outputs = outputs
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    print(f"wrote {out}")
    return 0


def cmd_zador(args) -> int:
    t0 = time.perf_counter()
    try:
        exponents = [float(v) for v in args.s.split(",") if v]
    except ValueError as exc:
        raise ValidationError(f"bad exponent list {args.s!r}") from exc
    density = DENSITIES_1D[args.density]()
    rows = []
    last = None
    for s in exponents:
        res = zador_experiment_1d(density, args.samples, args.clusters, s, args.seed, bins=args.bins)
        rows.append([s, res.kl_vs_p, res.kl_vs_p13, res.kl_vs_uniform])
        last = res
    out = Path(args.out)
    atomic_write_text(out, _csv_text(["s", "kl_vs_p", "kl_vs_p13", "kl_vs_uniform"], rows))
    outputs = [str(out)]
    if args.svg and last is not None:
        lo, hi = density.support
        xs = np.linspace(lo, hi, 512)
        pv = density.pdf(xs)
        p13 = pv ** (1.0 / 3.0)
        p13 = p13 / np.trapezoid(p13, xs)
        fig = histogram_svg(
            last.edges,
            last.histogram,
            curves=[(xs, pv, "p"), (xs, p13, "p13")],
            title=f"centroid histogram, s={exponents[-1]:g}",
            ylabel="density",
        )
        atomic_write_text(_svg_path(out), fig)
        outputs.append(str(_svg_path(out)))
    manifest = RunManifest(
        "zador",
        {"s": exponents, "density": args.density, "samples": args.samples, "clusters": args.clusters, "bins": args.bins},
        args.seed,
    )
    manifest.outputs = outputs
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    print(f"wrote {out}")
    return 0


def cmd_kl_check(args) -> int:
    t0 = time.perf_counter()
    scan = lemma1_scan(args.trials, max_support=args.max_support, seed=args.seed)
    line = f"checked {scan.trials} (distribution, t) pairs: {scan.violations} violations, max gap {scan.max_gap:.3e}"
    print(line)
    if args.out:
        out = Path(args.out)
        atomic_write_text(
            out,
            _csv_text(["pairs_checked", "violations", "max_gap"], [[scan.trials, scan.violations, scan.max_gap]]),
        )
        manifest = RunManifest("kl-check", {"trials": args.trials, "max_support": args.max_support}, args.seed)
        manifest.outputs = [str(out)]
        manifest.wall_time_s = time.perf_counter() - t0
        manifest.write(out)
    return 0 if scan.violations == 0 else 1


def cmd_stats(args) -> int:
    t0 = time.perf_counter()
    tree = load_tree(args.tree)
    data = load_dataset(args.data)
    if tree.n != data.n or tree.d != data.d:
        raise MismatchError(f"tree is over {tree.n}x{tree.d} but dataset is {data.n}x{data.d}")
    try:
        labels = np.array([int(v) for v in Path(args.labels).read_text().split()], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"{args.labels}: labels must be integers, one per line") from exc
    stats = balance_stats(tree, data, labels, knn_k=args.knn)
    out = Path(args.out)
    rows = [[r.class_id, r.class_size, r.cluster_count, r.mean_cluster_size] for r in stats.rows]
    atomic_write_text(out, _csv_text(["class_id", "class_size", "cluster_count", "mean_cluster_size"], rows))
    fits_out = out.with_name(out.stem + ".fits.csv")
    atomic_write_text(
        fits_out,
        _csv_text(
            ["count_slope", "count_intercept", "size_slope", "size_intercept"],
            [[stats.count_slope, stats.count_intercept, stats.size_slope, stats.size_intercept]],
        ),
    )
    outputs = [str(out), str(fits_out)]
    if args.svg:
        xs = [r.class_size for r in stats.rows]
        fig = scatter_svg(
            xs,
            [r.cluster_count for r in stats.rows],
            fit=(stats.count_slope, stats.count_intercept),
            title="clusters per class vs class size",
            xlabel="class size",
            ylabel="cluster count",
        )
        atomic_write_text(_svg_path(out), fig)
        outputs.append(str(_svg_path(out)))
    manifest = RunManifest("stats", {"knn": args.knn}, None)
    manifest.add_input(args.tree)
    manifest.add_input(args.data)
    manifest.add_input(args.labels)
    manifest.outputs = outputs
    manifest.wall_time_s = time.perf_counter() - t0
    manifest.write(out)
    print(f"wrote {out} and {fits_out}")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hikmeans", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--threads", type=int, default=None, help=f"worker threads (env {_ENV_THREADS}); never changes results")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="build a hierarchy from a config and a dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("sample", help="extract a balanced subset from a tree")
    p.add_argument("--tree", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--target", type=int, required=True, metavar="N")
    p.add_argument("--mode", choices=sorted(_MODES), default="hier")
    p.add_argument("--strategy", choices=["r", "c", "f"], default="r")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--index-format", choices=["text", "u64"], default="text")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("simulate", help="2-D mixture KL-to-uniform table")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None, help="optional mixture/bandwidth overrides")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--resolution", type=int, default=None)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("zador", help="1-D centroid-density experiment")
    p.add_argument("--out", required=True)
    p.add_argument("--s", default="2,4,8", help="comma-separated distortion exponents")
    p.add_argument("--density", choices=sorted(DENSITIES_1D), default="truncnorm")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--clusters", type=int, default=64)
    p.add_argument("--bins", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_zador)

    p = sub.add_parser("kl-check", help="randomised search for power-transform KL violations")
    p.add_argument("--trials", type=int, default=10_000)
    p.add_argument("--max-support", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_kl_check)

    p = sub.add_parser("stats", help="cluster-balance diagnostic against labels")
    p.add_argument("--tree", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--labels", required=True, help="text file, one integer label per point")
    p.add_argument("--out", required=True)
    p.add_argument("--knn", type=int, default=5)
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_stats)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    threads = args.threads
    if threads is None and os.environ.get(_ENV_THREADS):
        try:
            threads = int(os.environ[_ENV_THREADS])
        except ValueError:
            print(f"error: {_ENV_THREADS} must be an integer", file=sys.stderr)
            return 2
    if threads is not None:
        if threads < 1:
            print("error: --threads must be >= 1", file=sys.stderr)
            return 2
        _backend.set_threads(threads)
    try:
        return args.func(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (FormatError, DataError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except MismatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
