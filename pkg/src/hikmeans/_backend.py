"""Kernel backend selection.

HIKM_BACKEND=numba forces the compiled kernels (import error if numba is
missing), HIKM_BACKEND=numpy forces the fallback; unset means numba when
importable, numpy otherwise. The two backends agree to floating-point
round-off; within one backend, results are bit-identical for any thread
count (see _kernels_nb for how reductions are ordered).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernels_np

_ENV_VAR = "HIKM_BACKEND"

# fixed accumulation chunk: chosen once, never a function of the thread count
SUM_CHUNK = 4096


def _load():
    choice = os.environ.get(_ENV_VAR, "").strip().lower()
    if choice not in ("", "numba", "numpy"):
        raise ValueError(f"{_ENV_VAR} must be 'numba' or 'numpy', got {choice!r}")
    if choice == "numpy":
        return _kernels_np
    try:
        from . import _kernels_nb

        return _kernels_nb
    except ImportError:
        if choice == "numba":
            raise
        return _kernels_np


kernels = _load()

BACKEND: str = kernels.BACKEND


def assign(x: np.ndarray, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return kernels.assign(x, c)


def min_sqdist_update(x: np.ndarray, c: np.ndarray, d2: np.ndarray) -> None:
    kernels.min_sqdist_update(x, c, d2)


def kde_sum(points: np.ndarray, grid: np.ndarray, inv_two_b2: float) -> np.ndarray:
    return kernels.kde_sum(points, grid, inv_two_b2)


def set_threads(n: int) -> None:
    kernels.set_threads(n)


def cluster_sums(x: np.ndarray, labels: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cluster coordinate sums and member counts.

    Partial sums are produced per fixed-size chunk and added in chunk order,
    so the result does not depend on how chunks were scheduled.
    """
    partial, counts = kernels.chunk_sums(x, labels, k, SUM_CHUNK)
    sums = np.zeros(partial.shape[1:], dtype=np.float64)
    total = np.zeros(counts.shape[1], dtype=np.int64)
    for ci in range(partial.shape[0]):
        sums += partial[ci]
        total += counts[ci]
    return sums, total
