"""Tiled BK with hierarchical pairwise merging.

The volume is tiled over columns and slices.  Each tile runs BK on its own
edges; then adjacent tiles are merged pairwise, alternating between the
column and slice axes, and vertices on either side of a dissolved seam whose
tree tags differ are reactivated so the search continues across it.  Trees
and residuals are reused from round to round.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bk import FREE, BKState
from .preflow import FlowResult
from .structured_graph import CapacityStore, VolumeDims


def split_range(length: int, parts: int) -> list[tuple[int, int]]:
    """Contiguous near-equal ``[start, stop)`` ranges, larger ones first."""
    base, extra = divmod(length, parts)
    out, start = [], 0
    for i in range(parts):
        stop = start + base + (1 if i < extra else 0)
        out.append((start, stop))
        start = stop
    return out


def tile_grid_for(count: int, dims: VolumeDims) -> tuple[int, int]:
    """Split a tile total into ``(column tiles, slice tiles)``.

    Prefers the most square factorisation with columns getting the larger
    factor (4 -> 2x2, 2 -> 2x1); falls back to whatever fits the volume.
    """
    if count < 1:
        raise ValueError("tile count must be >= 1")
    options = [(tc, count // tc) for tc in range(1, count + 1) if count % tc == 0]
    fitting = [(tc, ts) for tc, ts in options if tc <= dims.columns and ts <= dims.slices]
    if fitting:
        return min(fitting, key=lambda p: (abs(p[0] - p[1]), -p[0]))
    tc = min(count, dims.columns)
    return tc, max(1, min(count // tc, dims.slices))


@dataclass
class SegmentGrid:
    dims: VolumeDims
    column_bounds: list[tuple[int, int]]
    slice_bounds: list[tuple[int, int]]

    @classmethod
    def build(cls, dims: VolumeDims, column_tiles: int, slice_tiles: int) -> "SegmentGrid":
        if not 1 <= column_tiles <= dims.columns or not 1 <= slice_tiles <= dims.slices:
            raise ValueError(
                f"tiling {column_tiles}x{slice_tiles} does not fit "
                f"{dims.columns} columns x {dims.slices} slices"
            )
        return cls(dims, split_range(dims.columns, column_tiles),
                   split_range(dims.slices, slice_tiles))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.column_bounds), len(self.slice_bounds)

    def tile_of(self) -> list[int]:
        """Per-vertex tile id ``column_block * slice_blocks + slice_block``."""
        dims = self.dims
        cb = np.zeros(dims.columns, dtype=np.int64)
        for i, (a, b) in enumerate(self.column_bounds):
            cb[a:b] = i
        sb = np.zeros(dims.slices, dtype=np.int64)
        for i, (a, b) in enumerate(self.slice_bounds):
            sb[a:b] = i
        ids = cb[:, None] * len(self.slice_bounds) + sb[None, :]
        return np.repeat(ids.ravel(), dims.rows).tolist()

    def merged(self, axis: str) -> "SegmentGrid":
        """Pair adjacent blocks along ``axis``; an odd last block joins its neighbour."""
        bounds = self.column_bounds if axis == "columns" else self.slice_bounds
        k = len(bounds)
        groups = [[2 * i, 2 * i + 1] for i in range(k // 2)]
        if k % 2:
            if groups:
                groups[-1].append(k - 1)
            else:
                groups.append([0])
        new = [(bounds[g[0]][0], bounds[g[-1]][1]) for g in groups]
        if axis == "columns":
            return SegmentGrid(self.dims, new, self.slice_bounds)
        return SegmentGrid(self.dims, self.column_bounds, new)

    def schedule(self) -> list[str]:
        """Merge axes per round: columns first, then alternating, skipping done axes."""
        tc, ts = self.shape
        rounds, axis = [], "columns"
        while tc > 1 or ts > 1:
            if axis == "columns" and tc == 1:
                axis = "slices"
            elif axis == "slices" and ts == 1:
                axis = "columns"
            rounds.append(axis)
            if axis == "columns":
                tc //= 2
                axis = "slices"
            else:
                ts //= 2
                axis = "columns"
        return rounds


def _thread_cap() -> int | None:
    value = os.environ.get("GRIDFLOW_THREADS")
    return max(1, int(value)) if value else None


def _reactivate_seams(state: BKState, old_tile: list[int], new_tile: list[int]) -> int:
    """Activate tree vertices next to a dissolved seam whose neighbour's tag differs."""
    dims = state.dims
    tables = state.residual.cache.bounded_tables
    sr = dims.column_size
    tree = state.tree
    count = 0
    for v in range(dims.n):
        tv = tree[v]
        if tv == FREE:
            continue
        c = v // sr
        table = tables[0 if c == 0 else (2 if c == dims.columns - 1 else 1)][v % sr]
        for _slot, _dm, dw in table:
            w = v + dw
            if old_tile[w] != old_tile[v] and new_tile[w] == new_tile[v] and tree[w] != tv:
                if not state.queued[v]:
                    count += 1
                state.activate(v)
                break
    return count


def _cross_tile_snapshot(residual: CapacityStore, tile_of: list[int]) -> np.ndarray:
    dims = residual.dims
    blocks = residual.blocks()[:, : dims.lateral_end]
    tiles = np.asarray(tile_of)
    mask = np.zeros(blocks.shape, dtype=bool)
    for v_pos, entries in enumerate(residual.cache.neighbor_table):
        for slot, _dm, dw in entries:
            v = np.arange(v_pos, dims.n, dims.column_size)
            w = v + dw
            ok = (w >= 0) & (w < dims.n)
            cross = np.zeros(v.shape, dtype=bool)
            cross[ok] = tiles[v[ok]] != tiles[w[ok]]
            mask[v, slot] = cross
    return blocks[mask].copy()


def bk_parallel_maxflow(instance: CapacityStore, tiles: tuple[int, int] = (1, 1),
                        threads: int | None = None,
                        check_isolation: bool = False) -> FlowResult:
    """Tiled BK; ``tiles`` is ``(column tiles, slice tiles)``."""
    dims = instance.dims
    residual = instance.copy()
    grid = SegmentGrid.build(dims, *tiles)
    tile_of = grid.tile_of()
    state = BKState(residual, tile_of)
    for t in set(tile_of):
        state.queue_for(t)
    state.init_terminal_trees()
    cap = _thread_cap()
    threads = threads or grid.shape[0] * grid.shape[1]
    if cap is not None:
        threads = min(threads, cap)

    round_flows = []
    reactivated = []

    def run_round():
        ids = sorted(set(state.tile_of))
        before = _cross_tile_snapshot(residual, state.tile_of) if check_isolation else None
        with ThreadPoolExecutor(max_workers=max(1, min(threads, len(ids)))) as pool:
            gained = sum(pool.map(state.solve, ids))
        if check_isolation:
            after = _cross_tile_snapshot(residual, state.tile_of)
            if not np.array_equal(before, after):
                raise AssertionError("a tile mutated a residual edge crossing its boundary")
        round_flows.append(gained)

    run_round()
    for axis in grid.schedule():
        old_tile = state.tile_of
        grid = grid.merged(axis)
        new_tile = grid.tile_of()
        state.tile_of = new_tile
        state.queues = {}
        for t in set(new_tile):
            state.queue_for(t)
        state.queued = bytearray(dims.n)
        reactivated.append(_reactivate_seams(state, old_tile, new_tile))
        run_round()

    return FlowResult(
        value=state.flow_value,
        instance=instance,
        residual=residual,
        backend="bk-parallel",
        stats={
            "tiles": f"{tiles[0]}x{tiles[1]}",
            "rounds": len(round_flows),
            "round_flows": round_flows,
            "reactivated": reactivated,
            "augmentations": state.augmentations,
        },
    )
