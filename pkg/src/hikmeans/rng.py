"""Named, counter-based random streams.

Every random decision in this package flows through a Philox generator
keyed by the user seed plus a stream label, so results are reproducible
from (seed, label) alone and independent streams never collide. Philox is
counter-based: jumping to a stream costs nothing and the mapping below is
simple enough to reproduce in any language.

Key derivation (all arithmetic mod 2**64):

    h = splitmix64(seed XOR fnv1a64(label))
    for each integer index i (in order):  h = splitmix64(h XOR (i + 1))

The 64-bit ``h`` becomes the low word of the 128-bit Philox key.

Streams used by this package:

    ("init", level, step)    centroid initialisation; step 0 is the initial
                             k-means of a level, step s >= 1 the s-th
                             resampling-clustering pass of that level
    ("sample", level, j)     random intra-cluster draws for cluster j
    ("sim.mixture2d",)       2-D mixture generator
    ("sim.zador",)           1-D density sampling
    ("sim.imbalance",)       power-law class resampler
    ("sim.baseline", i)      uniform reference points, replicate i
    ("sim.pool",)            labelled synthetic pool generator
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def _splitmix64(z: int) -> int:
    z &= _MASK64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9 & _MASK64
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def _fnv1a64(name: str) -> int:
    h = 0xCBF29CE484222325
    for b in name.encode("utf-8"):
        h = (h ^ b) * 0x100000001B3 & _MASK64
    return h


def stream_key(seed: int, name: str, *indices: int) -> int:
    """64-bit Philox key for the stream (seed, name, *indices)."""
    h = _splitmix64((seed & _MASK64) ^ _fnv1a64(name))
    for ix in indices:
        h = _splitmix64(h ^ ((int(ix) + 1) & _MASK64))
    return h


def stream(seed: int, name: str, *indices: int) -> np.random.Generator:
    """Generator for a named stream; see module docstring for the catalogue."""
    return np.random.Generator(np.random.Philox(key=stream_key(seed, name, *indices)))
