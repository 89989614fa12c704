"""Deterministic instance generators.

Random numbers come from SplitMix64 used as a counter-based generator:
draw ``i`` of a stream is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)`` with
the standard finaliser

    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

all modulo 2**64.  A draw is mapped to ``[lo, hi]`` by taking its high 32
bits ``x`` and computing ``lo + (x * (hi - lo + 1)) >> 32``.  Independent
streams use seeds ``seed ^ (stream * 0xD1B54A32D192ED03)``.
"""

from __future__ import annotations

import numpy as np

from .structured_graph import CAPACITY_DTYPE, CapacityStore, VolumeDims, slot_exists_mask
from .surface import SurfaceWeights

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
MIX1 = np.uint64(0xBF58476D1CE4E5B9)
MIX2 = np.uint64(0x94D049BB133111EB)
STREAM = 0xD1B54A32D192ED03
MASK64 = (1 << 64) - 1


def splitmix64(seed: int, count: int, stream: int = 0) -> np.ndarray:
    """``count`` uint64 draws of stream ``stream``."""
    base = np.uint64((seed ^ (stream * STREAM)) & MASK64)
    i = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = base + i * GOLDEN
        z = (z ^ (z >> np.uint64(30))) * MIX1
        z = (z ^ (z >> np.uint64(27))) * MIX2
        z = z ^ (z >> np.uint64(31))
    return z


def bounded(draws: np.ndarray, lo: int, hi: int) -> np.ndarray:
    span = hi - lo + 1
    if span < 1 or span > 2**32:
        raise ValueError("need lo <= hi with at most 2**32 values")
    high = (draws >> np.uint64(32)).astype(np.uint64)
    return (lo + ((high * np.uint64(span)) >> np.uint64(32)).astype(np.int64))


def random_capacities(dims: VolumeDims, seed: int, lo: int = 0, hi: int = 20,
                      density: float = 1.0) -> CapacityStore:
    """Uniform integer capacities on every existing half-edge and terminal arc.

    With ``density < 1`` each half-edge is independently kept with that
    probability (a second stream decides).
    """
    if dims.n > 2**40:
        raise ValueError("volume too large to generate")
    caps = bounded(splitmix64(seed, dims.half_edges, 0), lo, hi)
    if density < 1.0:
        keep = bounded(splitmix64(seed, dims.half_edges, 1), 0, 2**20 - 1) < density * 2**20
        caps = np.where(keep, caps, 0)
    caps = np.where(slot_exists_mask(dims).ravel(), caps, 0)
    store = CapacityStore(dims, caps.astype(CAPACITY_DTYPE))
    store.validate()
    return store


def random_weights(dims: VolumeDims, seed: int, lo: int = 0, hi: int = 9,
                   cost: str = "linear") -> SurfaceWeights:
    """Random vertex weights and a convex edge-cost table.

    ``cost="linear"`` gives ``|d|``; ``cost="random"`` draws non-negative
    second differences so the table is convex by construction.
    """
    w = bounded(splitmix64(seed, dims.n, 0), lo, hi)
    k = dims.edge_interval
    if cost == "linear":
        g = np.abs(np.arange(-k, k + 1, dtype=np.int64))
    elif cost == "random":
        draws = bounded(splitmix64(seed, 2 * k + 2, 2), 0, 3)
        g = np.zeros(2 * k + 1, dtype=np.int64)
        g[0] = draws[0]
        if k:
            slope = int(draws[1]) - 3
            for i in range(1, 2 * k + 1):
                g[i] = g[i - 1] + slope
                slope += int(draws[i + 1])
    else:
        raise ValueError(f"unknown cost profile {cost!r}")
    return SurfaceWeights(w.reshape(dims.columns, dims.slices, dims.rows), g)
