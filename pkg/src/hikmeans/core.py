"""Domain types and on-disk formats shared by every other module.

Embedding pools are float32 row-major matrices behind a tiny streamable
header; cluster trees are a JSON manifest plus sibling binary arrays
(float32 centroids, uint32 assignments). Sampled subsets are index lists,
either one decimal per line or a raw uint64 array. All writes go through
a temp file and an atomic rename.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

MAGIC = b"HKM1"
_HEADER = struct.Struct("<8sIB")  # n: u64, d: u32, dtype tag: u8 (0 = f32)
_DTYPE_F32 = 0

TREE_FORMAT = "hkm-tree"
TREE_VERSION = 1


class HikmeansError(Exception):
    """Base class for package errors."""


class FormatError(HikmeansError):
    """Malformed or mismatched file content."""


class DataError(HikmeansError):
    """Invalid values inside an otherwise well-formed file or array."""


class ValidationError(HikmeansError, ValueError):
    """A domain invariant or configuration constraint is violated."""


class DegenerateDataError(ValidationError):
    """Input admits no meaningful clustering (e.g. all points identical)."""


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class EmbeddingDataset:
    """An n x d pool of float32 feature vectors, one row per point."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.data, dtype=np.float32)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"dataset must be a non-empty 2-d matrix, got shape {arr.shape}")
        bad = ~np.isfinite(arr)
        if bad.any():
            row = int(np.nonzero(bad.any(axis=1))[0][0])
            raise DataError(f"non-finite value in row {row}")
        object.__setattr__(self, "data", arr)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True)
class TreeLevel:
    """Centroids of one level plus the assignment of that level's inputs."""

    centroids: np.ndarray  # (k, d) float32
    assignment: np.ndarray  # (input_size,) uint32

    def __post_init__(self):
        object.__setattr__(self, "centroids", np.ascontiguousarray(self.centroids, dtype=np.float32))
        object.__setattr__(self, "assignment", np.ascontiguousarray(self.assignment, dtype=np.uint32))

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def input_size(self) -> int:
        return self.assignment.shape[0]


@dataclass(frozen=True)
class ClusterTree:
    """Bottom-up hierarchy: level 1 clusters points, level t>1 clusters the
    centroids of level t-1. Leaves of any node partition the dataset."""

    levels: tuple[TreeLevel, ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(self.levels))
        self.validate()

    @property
    def depth(self) -> int:
        return len(self.levels)

    @property
    def n(self) -> int:
        return self.levels[0].input_size

    @property
    def d(self) -> int:
        return self.levels[0].centroids.shape[1]

    def validate(self) -> None:
        if not self.levels:
            raise ValidationError("tree has no levels")
        prev_k = None
        for t, lv in enumerate(self.levels, start=1):
            if lv.k < 1:
                raise ValidationError(f"level {t} has no centroids")
            if prev_k is not None:
                if lv.input_size != prev_k:
                    raise ValidationError(
                        f"level {t} clusters {lv.input_size} items but level {t-1} has {prev_k} centroids"
                    )
                if lv.k > prev_k:
                    raise ValidationError(f"level {t} has more clusters ({lv.k}) than its input ({prev_k})")
            if lv.assignment.size and int(lv.assignment.max()) >= lv.k:
                raise ValidationError(f"level {t} assignment index out of range")
            if lv.centroids.shape[1] != self.levels[0].centroids.shape[1]:
                raise ValidationError(f"level {t} dimension mismatch")
            counts = np.bincount(lv.assignment.astype(np.int64), minlength=lv.k)
            if (counts == 0).any():
                j = int(np.nonzero(counts == 0)[0][0])
                raise ValidationError(f"level {t} cluster {j} is empty")
            prev_k = lv.k

    def labels_at_level(self, t: int) -> np.ndarray:
        """Composed point -> level-t cluster labels; the t-slice partition."""
        if not 1 <= t <= self.depth:
            raise ValidationError(f"level {t} out of range 1..{self.depth}")
        lab = self.levels[0].assignment.astype(np.int64)
        for lv in self.levels[1:t]:
            lab = lv.assignment.astype(np.int64)[lab]
        return lab

    def leaf_counts(self, t: int) -> np.ndarray:
        """Number of original points under each level-t node."""
        return np.bincount(self.labels_at_level(t), minlength=self.levels[t - 1].k)


@dataclass(frozen=True)
class ClusterConfig:
    """Build parameters for the hierarchy (see hierarchy.build_hierarchy)."""

    k: tuple[int, ...]
    m: int = 0
    r: tuple[int, ...] | None = None
    init: str = "kmeanspp"
    seed: int = 0
    max_iters: int = 100
    tol: float = 1e-4
    resample_level1: bool = False

    def __post_init__(self):
        object.__setattr__(self, "k", tuple(int(v) for v in self.k))
        if self.r is not None:
            object.__setattr__(self, "r", tuple(int(v) for v in self.r))
        self.validate()

    @property
    def levels(self) -> int:
        return len(self.k)

    def validate(self) -> None:
        if len(self.k) < 1:
            raise ValidationError("at least one level required")
        if any(v < 1 for v in self.k):
            raise ValidationError("cluster counts must be >= 1")
        if self.m < 0:
            raise ValidationError("resampling step count must be >= 0")
        if self.r is not None:
            if len(self.r) != len(self.k):
                raise ValidationError("r must give one count per level")
            if any(v < 1 for v in self.r):
                raise ValidationError("resample counts must be >= 1")
        if self.init not in ("kmeanspp", "random"):
            raise ValidationError(f"unknown init method {self.init!r}")
        if self.max_iters < 1:
            raise ValidationError("max_iters must be >= 1")
        if self.tol < 0:
            raise ValidationError("tol must be >= 0")


@dataclass(frozen=True)
class SampleSpec:
    """What to extract: target size, flat or hierarchical mode, r/c/f strategy."""

    n_target: int
    mode: str = "hierarchical"
    strategy: str = "r"
    seed: int = 0

    def __post_init__(self):
        if self.n_target < 0:
            raise ValidationError("target size must be >= 0")
        if self.mode not in ("flat", "hierarchical"):
            raise ValidationError(f"unknown sampling mode {self.mode!r}")
        if self.strategy not in ("r", "c", "f"):
            raise ValidationError(f"unknown strategy {self.strategy!r}")


# ---------------------------------------------------------------------------
# atomic writes


def atomic_write_bytes(path: str | Path, payload: bytes) -> None:
    """Write payload to path via a temp file and atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_text(path: str | Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def sha256_bytes(payload: bytes) -> str:
    return hashlib.sha256(payload).hexdigest()


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# embedding pool format


def save_dataset(ds: EmbeddingDataset, path: str | Path) -> None:
    """Write magic + little-endian {n: u64, d: u32, tag: u8} + f32 payload."""
    header = MAGIC + struct.pack("<QIB", ds.n, ds.d, _DTYPE_F32)
    atomic_write_bytes(path, header + ds.data.tobytes())


def load_dataset(path: str | Path) -> EmbeddingDataset:
    """Read and validate an embedding pool file."""
    path = Path(path)
    raw = path.read_bytes()
    head_len = len(MAGIC) + struct.calcsize("<QIB")
    if len(raw) < head_len or raw[: len(MAGIC)] != MAGIC:
        raise FormatError(f"{path}: bad magic, not an embedding pool file")
    n, d, tag = struct.unpack("<QIB", raw[len(MAGIC) : head_len])
    if tag != _DTYPE_F32:
        raise FormatError(f"{path}: unsupported dtype tag {tag}")
    if n < 1 or d < 1:
        raise FormatError(f"{path}: header declares empty matrix {n}x{d}")
    expected = n * d * 4
    payload = raw[head_len:]
    if len(payload) != expected:
        raise FormatError(
            f"{path}: payload truncated, header declares {n}x{d} ({expected} bytes) but found {len(payload)}"
        )
    data = np.frombuffer(payload, dtype="<f4").reshape(n, d)
    return EmbeddingDataset(data)  # finiteness checked by the type


# ---------------------------------------------------------------------------
# tree format: JSON manifest + sibling binary arrays


def _level_files(path: Path, t: int) -> tuple[Path, Path]:
    stem = path.name
    return (
        path.with_name(f"{stem}.L{t:02d}.centroids.f32"),
        path.with_name(f"{stem}.L{t:02d}.assign.u32"),
    )


def save_tree(tree: ClusterTree, path: str | Path) -> None:
    """Write the manifest and one centroid/assignment pair per level."""
    path = Path(path)
    levels_meta = []
    for t, lv in enumerate(tree.levels, start=1):
        cfile, afile = _level_files(path, t)
        cbytes = lv.centroids.astype("<f4").tobytes()
        abytes = lv.assignment.astype("<u4").tobytes()
        atomic_write_bytes(cfile, cbytes)
        atomic_write_bytes(afile, abytes)
        levels_meta.append(
            {
                "k": lv.k,
                "input_size": lv.input_size,
                "centroids_file": cfile.name,
                "assign_file": afile.name,
                "centroids_sha256": sha256_bytes(cbytes),
                "assign_sha256": sha256_bytes(abytes),
            }
        )
    manifest = {
        "format": TREE_FORMAT,
        "version": TREE_VERSION,
        "n": tree.n,
        "d": tree.d,
        "levels": levels_meta,
    }
    atomic_write_text(path, json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def load_tree(path: str | Path) -> ClusterTree:
    """Read a tree back; checksums, ranges and invariants are verified."""
    path = Path(path)
    try:
        manifest = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: unreadable tree manifest ({exc})") from exc
    if manifest.get("format") != TREE_FORMAT:
        raise FormatError(f"{path}: not a tree manifest")
    if manifest.get("version") != TREE_VERSION:
        raise FormatError(f"{path}: unsupported tree version {manifest.get('version')}")
    n, d = int(manifest["n"]), int(manifest["d"])
    levels = []
    for t, meta in enumerate(manifest["levels"], start=1):
        cfile = path.with_name(meta["centroids_file"])
        afile = path.with_name(meta["assign_file"])
        cbytes = cfile.read_bytes()
        abytes = afile.read_bytes()
        if sha256_bytes(cbytes) != meta["centroids_sha256"]:
            raise FormatError(f"{cfile}: checksum mismatch")
        if sha256_bytes(abytes) != meta["assign_sha256"]:
            raise FormatError(f"{afile}: checksum mismatch")
        k, input_size = int(meta["k"]), int(meta["input_size"])
        if len(cbytes) != k * d * 4:
            raise FormatError(f"{cfile}: wrong size for {k}x{d} float32")
        if len(abytes) != input_size * 4:
            raise FormatError(f"{afile}: wrong size for {input_size} uint32")
        centroids = np.frombuffer(cbytes, dtype="<f4").reshape(k, d)
        assignment = np.frombuffer(abytes, dtype="<u4")
        levels.append(TreeLevel(centroids, assignment))
    if levels and levels[0].input_size != n:
        raise FormatError(f"{path}: manifest n={n} but level 1 assigns {levels[0].input_size} items")
    try:
        return ClusterTree(tuple(levels))
    except ValidationError as exc:
        raise FormatError(f"{path}: invalid tree ({exc})") from exc


# ---------------------------------------------------------------------------
# sampled index lists


def save_indices(indices: np.ndarray, path: str | Path, fmt: str = "text") -> None:
    """Write point indices either as decimal lines or a raw uint64 array."""
    idx = np.asarray(indices, dtype=np.uint64)
    if fmt == "text":
        atomic_write_text(path, "".join(f"{int(i)}\n" for i in idx))
    elif fmt == "u64":
        atomic_write_bytes(path, idx.astype("<u8").tobytes())
    else:
        raise ValidationError(f"unknown index format {fmt!r}")


def load_indices(path: str | Path, fmt: str = "text") -> np.ndarray:
    path = Path(path)
    if fmt == "text":
        text = path.read_text().split()
        return np.array([int(v) for v in text], dtype=np.uint64)
    if fmt == "u64":
        return np.frombuffer(path.read_bytes(), dtype="<u8").copy()
    raise ValidationError(f"unknown index format {fmt!r}")
