"""Backend dispatch for structured instances."""

from __future__ import annotations

import numpy as np

from .bk import bk_maxflow
from .cut import CutResult, cut_capacity, min_cut
from .oracle import oracle_maxflow, store_to_edge_list
from .parallel import pr_parallel_maxflow
from .parallel_bk import bk_parallel_maxflow, tile_grid_for
from .preflow import FlowResult, push_relabel_maxflow
from .structured_graph import CapacityStore

BACKENDS = ("pr-serial", "pr-parallel", "bk-serial", "bk-parallel", "oracle")
LARGE_GRAPH = 20_000_000


def default_gr_factor(n: int) -> float:
    """2 for smaller graphs, 1 from 20M vertices up."""
    return 1.0 if n >= LARGE_GRAPH else 2.0


def solve(instance: CapacityStore, backend: str = "pr-serial", segments: int = 1,
          tiles: tuple[int, int] | int | None = None, gr_factor: float | None = None,
          seed: int = 0, **options) -> FlowResult:
    """Max flow with the named backend.

    ``tiles`` for bk-parallel is ``(column tiles, slice tiles)`` or a total
    that is split by :func:`tile_grid_for`.
    """
    if gr_factor is None:
        gr_factor = default_gr_factor(instance.dims.n)
    if backend == "pr-serial":
        return push_relabel_maxflow(instance, gr_factor)
    if backend == "pr-parallel":
        return pr_parallel_maxflow(instance, segments, gr_factor, seed=seed, **options)
    if backend == "bk-serial":
        return bk_maxflow(instance)
    if backend == "bk-parallel":
        if tiles is None:
            tiles = (1, 1)
        if isinstance(tiles, int):
            tiles = tile_grid_for(tiles, instance.dims)
        return bk_parallel_maxflow(instance, tuple(tiles), **options)
    if backend == "oracle":
        result = oracle_maxflow(store_to_edge_list(instance))
        return FlowResult(value=result.value, instance=instance, residual=None,
                          backend="oracle", stats={"oracle": result})
    raise ValueError(f"unknown backend {backend!r}; choose from {', '.join(BACKENDS)}")


def result_cut(result: FlowResult) -> CutResult:
    """Minimum cut of a solved instance (oracle results use the oracle's cut)."""
    if result.residual is not None:
        return min_cut(result.instance, result.residual)
    n = result.instance.dims.n
    mask = np.zeros(n, dtype=bool)
    side = [v for v in result.stats["oracle"].source_side if v < n]
    mask[side] = True
    return CutResult(mask, cut_capacity(result.instance, mask))
