"""YAML config files with strict schemas (typos in a k schedule are costly)."""

from __future__ import annotations

from pathlib import Path

import yaml

from .core import ClusterConfig, HikmeansError, ValidationError
from .evalsim import DEFAULT_MIXTURE, MixtureSpec


class ConfigError(HikmeansError):
    """Bad config file: unknown keys, wrong types, or violated constraints."""


_CLUSTER_KEYS = {"levels", "k", "m", "r", "init", "seed", "tol", "max_iters", "resample_level1"}
_SIMULATE_KEYS = {"means", "sigma", "weights", "uniform_weight", "bandwidth", "resolution"}


def _load_mapping(path: str | Path) -> dict:
    try:
        doc = yaml.safe_load(Path(path).read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: cannot parse config ({exc})") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a mapping")
    return doc


def load_cluster_config(path: str | Path, seed_override: int | None = None) -> ClusterConfig:
    """Parse a clustering config; see README for the schema."""
    doc = _load_mapping(path)
    unknown = set(doc) - _CLUSTER_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    if "k" not in doc:
        raise ConfigError(f"{path}: missing required key 'k'")
    k = doc["k"]
    if not isinstance(k, list) or not all(isinstance(v, int) for v in k):
        raise ConfigError(f"{path}: 'k' must be a list of integers")
    if "levels" in doc and doc["levels"] != len(k):
        raise ConfigError(f"{path}: levels={doc['levels']} but k lists {len(k)} entries")
    r = doc.get("r")
    if r is not None and (not isinstance(r, list) or not all(isinstance(v, int) for v in r)):
        raise ConfigError(f"{path}: 'r' must be a list of integers")
    seed = int(doc.get("seed", 0)) if seed_override is None else int(seed_override)
    try:
        return ClusterConfig(
            k=tuple(k),
            m=int(doc.get("m", 0)),
            r=tuple(r) if r is not None else None,
            init=str(doc.get("init", "kmeanspp")),
            seed=seed,
            max_iters=int(doc.get("max_iters", 100)),
            tol=float(doc.get("tol", 1e-4)),
            resample_level1=bool(doc.get("resample_level1", False)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def load_simulate_config(path: str | Path) -> tuple[MixtureSpec, float | None, int | None]:
    """Optional overrides for the 2-D simulation: mixture, bandwidth, resolution."""
    doc = _load_mapping(path)
    unknown = set(doc) - _SIMULATE_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    try:
        mixture = MixtureSpec(
            means=tuple(tuple(float(v) for v in m) for m in doc.get("means", DEFAULT_MIXTURE.means)),
            sigma=float(doc.get("sigma", DEFAULT_MIXTURE.sigma)),
            weights=tuple(float(w) for w in doc.get("weights", DEFAULT_MIXTURE.weights)),
            uniform_weight=float(doc.get("uniform_weight", DEFAULT_MIXTURE.uniform_weight)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    bandwidth = float(doc["bandwidth"]) if "bandwidth" in doc else None
    resolution = int(doc["resolution"]) if "resolution" in doc else None
    return mixture, bandwidth, resolution
