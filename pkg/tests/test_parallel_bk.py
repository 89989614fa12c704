from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_store, store_from_arcs
from gridflow.bk import FREE, SOURCE_TREE, TERMINAL, BKState, bk_maxflow
from gridflow.cut import flow_violations, min_cut
from gridflow.oracle import oracle_maxflow, store_to_edge_list
from gridflow.parallel_bk import SegmentGrid, bk_parallel_maxflow, split_range, tile_grid_for
from gridflow.structured_graph import RIGHT, UP, VolumeDims


def seam_fixture():
    """Four columns in a row, tiled 2x1.

    Each half has an internal path worth 2; a path worth 3 more runs from
    column 0 to column 3 through the seam between columns 1 and 2.
    """
    dims = VolumeDims(1, 4, 1, 0)
    right = dims.lateral_slot(RIGHT, 0)
    return store_from_arcs(
        dims, source=[(0, 5), (2, 2)], sink=[(1, 2), (3, 5)],
        arcs=[(0, right, 5), (1, right, 3), (2, right, 5)],
    )


def test_split_range_larger_first():
    assert split_range(7, 2) == [(0, 4), (4, 7)]
    assert split_range(8, 4) == [(0, 2), (2, 4), (4, 6), (6, 8)]


def test_tile_grid_for():
    dims = VolumeDims(3, 4, 4, 1)
    assert tile_grid_for(1, dims) == (1, 1)
    assert tile_grid_for(2, dims) == (2, 1)
    assert tile_grid_for(4, dims) == (2, 2)
    assert tile_grid_for(4, VolumeDims(3, 1, 4, 1)) == (1, 4)
    assert tile_grid_for(4, VolumeDims(3, 4, 1, 1)) == (4, 1)


def test_tiles_partition_the_volume():
    dims = VolumeDims(2, 5, 3, 1)
    grid = SegmentGrid.build(dims, 3, 2)
    tile_of = grid.tile_of()
    assert len(tile_of) == dims.n
    assert len(set(tile_of)) == 6
    for v in range(dims.n):
        c, s, _ = dims.coords(v)
        assert tile_of[v] == tile_of[dims.column_size * c + dims.rows * s]


@pytest.mark.parametrize("tiles,rounds", [((1, 1), 1), ((2, 1), 2), ((4, 1), 3),
                                          ((2, 2), 3), ((4, 4), 5), ((3, 1), 2)])
def test_round_count(tiles, rounds):
    dims = VolumeDims(2, 4, 4, 1)
    grid = SegmentGrid.build(dims, *tiles)
    assert len(grid.schedule()) + 1 == rounds


def test_schedule_alternates_columns_first():
    grid = SegmentGrid.build(VolumeDims(1, 4, 4, 0), 4, 4)
    assert grid.schedule() == ["columns", "slices", "columns", "slices"]
    grid = SegmentGrid.build(VolumeDims(1, 4, 4, 0), 4, 1)
    assert grid.schedule() == ["columns", "columns"]


def test_remainder_block_joins_left_neighbour():
    grid = SegmentGrid.build(VolumeDims(1, 6, 1, 0), 3, 1)
    assert grid.merged("columns").column_bounds == [(0, 6)]
    grid = SegmentGrid.build(VolumeDims(1, 10, 1, 0), 5, 1)
    assert grid.merged("columns").column_bounds == [(0, 4), (4, 10)]


def test_single_tile_matches_serial(rng):
    for _ in range(30):
        store = random_store(rng)
        assert bk_parallel_maxflow(store, (1, 1)).value == bk_maxflow(store).value


def test_tile_without_sink_arcs():
    dims = VolumeDims(2, 2, 1, 0)
    right = dims.lateral_slot(RIGHT, 0)
    store = store_from_arcs(dims, source=[(0, 4)], arcs=[(0, UP, 1), (0, right, 1),
                                                         (1, right, 1)])
    residual = store.copy()
    state = BKState(residual)
    state.init_terminal_trees()
    assert state.solve() == 0
    assert all(t == SOURCE_TREE for t in state.tree)


def test_cross_seam_flow_recovered_after_merge():
    store = seam_fixture()
    result = bk_parallel_maxflow(store, (2, 1))
    assert result.stats["round_flows"][0] == 4
    assert result.value == 7 == oracle_maxflow(store_to_edge_list(store)).value
    assert result.stats["reactivated"][0] > 0


def test_identical_tags_reactivate_nothing():
    # every vertex is a source-tree root and there are no sink arcs
    dims = VolumeDims(2, 4, 2, 1)
    store = store_from_arcs(dims, source=[(v, 1) for v in range(dims.n)],
                            arcs=[(0, dims.lateral_slot(RIGHT, 0), 1)])
    result = bk_parallel_maxflow(store, (2, 2))
    assert result.value == 0
    assert result.stats["reactivated"] == [0, 0]


def test_free_vertices_are_not_reactivated():
    dims = VolumeDims(1, 2, 1, 0)
    store = store_from_arcs(dims)
    result = bk_parallel_maxflow(store, (2, 1))
    assert result.stats["reactivated"] == [0]
    assert result.value == 0


def test_tiles_do_not_touch_seam_edges(rng):
    for _ in range(20):
        store = random_store(rng, min_columns=2)
        tiles = tile_grid_for(4, store.dims)
        result = bk_parallel_maxflow(store, tiles, check_isolation=True)
        assert result.value == oracle_maxflow(store_to_edge_list(store)).value


def test_threads_capped_by_env(monkeypatch):
    monkeypatch.setenv("GRIDFLOW_THREADS", "1")
    assert bk_parallel_maxflow(seam_fixture(), (4, 1)).value == 7


@settings(max_examples=120, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([1, 2, 4]))
def test_tiled_bk_matches_oracle(seed, count):
    store = random_store(np.random.default_rng(seed))
    tiles = tile_grid_for(count, store.dims)
    result = bk_parallel_maxflow(store, tiles)
    expected = oracle_maxflow(store_to_edge_list(store)).value
    assert result.value == expected
    assert flow_violations(store, result.residual, result.value) == []
    assert min_cut(store, result.residual).cut_capacity == expected


def test_tree_edges_keep_residual_capacity(rng):
    for _ in range(30):
        store = random_store(rng)
        residual = store.copy()
        state = BKState(residual)
        state.init_terminal_trees()
        state.solve()
        res = residual.view
        for v in range(store.dims.n):
            if state.tree[v] == FREE:
                continue
            if state.parent[v] == TERMINAL:
                continue
            assert state.parent[v] >= 0
            assert state.tree[state.parent[v]] == state.tree[v]
            assert res[state.parent_edge[v]] > 0
