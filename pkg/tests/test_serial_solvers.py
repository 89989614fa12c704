from __future__ import annotations

from collections import deque

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_store, store_from_arcs
from gridflow.bk import bk_maxflow
from gridflow.cut import flow_violations, label_violations, min_cut
from gridflow.errors import FlowNotMaximalError
from gridflow.io import parse_dimacs, parse_pogf
from gridflow.oracle import EdgeListGraph, oracle_maxflow, store_to_edge_list
from gridflow.preflow import (
    FlowState,
    discharge,
    global_relabel_serial,
    initialize_preflow,
    push,
    push_relabel_maxflow,
    relabel,
)
from gridflow.structured_graph import (
    DOWN,
    RIGHT,
    SOURCE,
    UP,
    CapacityStore,
    VolumeDims,
    slot_exists_mask,
)


def diamond_store():
    # two middle vertices a, b; every arc has capacity 1
    dims = VolumeDims(1, 2, 1, 0)
    return store_from_arcs(dims, source=[(0, 1), (1, 1)], sink=[(0, 1), (1, 1)])


def path_store(caps=(4, 2, 3)):
    dims = VolumeDims(1, 2, 1, 0)
    return store_from_arcs(dims, source=[(0, caps[0])], sink=[(1, caps[2])],
                           arcs=[(0, dims.lateral_slot(RIGHT, 0), caps[1])])


def hand_store():
    dims = VolumeDims(2, 2, 1, 1)
    return store_from_arcs(
        dims, source=[(0, 3), (1, 2)], sink=[(2, 2), (3, 5)],
        arcs=[(0, dims.lateral_slot(RIGHT, 0), 2), (0, dims.lateral_slot(RIGHT, 1), 1),
              (1, dims.lateral_slot(RIGHT, 0), 1), (1, dims.lateral_slot(RIGHT, -1), 4)],
    )


SOLVERS = {
    "pr": lambda store: push_relabel_maxflow(store).value,
    "bk": lambda store: bk_maxflow(store).value,
    "oracle": lambda store: oracle_maxflow(store_to_edge_list(store)).value,
}


@pytest.mark.parametrize("solver", SOLVERS)
def test_diamond(solver):
    assert SOLVERS[solver](diamond_store()) == 2


@pytest.mark.parametrize("solver", SOLVERS)
def test_path_bottleneck(solver):
    assert SOLVERS[solver](path_store()) == 2


@pytest.mark.parametrize("solver", SOLVERS)
def test_hand_worked_instance(solver):
    # cut {b0->t, a0->b1, a1->b1} = 2 + 1 + 1
    assert SOLVERS[solver](hand_store()) == 4


def test_hand_worked_fixture_matches(fixtures_dir):
    data = (fixtures_dir / "hand_2x2x1_k1.pogf").read_bytes()
    assert np.array_equal(parse_pogf(data).residual, hand_store().residual)


@pytest.mark.parametrize("solver", SOLVERS)
def test_zero_capacity_source_arcs(solver):
    dims = VolumeDims(3, 2, 2, 1)
    store = store_from_arcs(dims, sink=[(v, 5) for v in range(dims.n)],
                            arcs=[(0, UP, 3)])
    assert SOLVERS[solver](store) == 0


def test_oracle_examples(fixtures_dir):
    assert oracle_maxflow(EdgeListGraph(2, 0, 1, [(0, 1, 9)])).value == 9
    graph = parse_dimacs((fixtures_dir / "diamond.dimacs").read_text())
    result = oracle_maxflow(graph)
    assert result.value == 2
    assert result.source_side == {graph.source}


def test_initialize_no_source_arcs():
    store = store_from_arcs(VolumeDims(2, 1, 1, 0), sink=[(0, 4)])
    state = FlowState.fresh(store)
    assert initialize_preflow(store, state) == []
    assert state.excess == [0, 0]


def test_initialize_saturates_source_arc():
    store = store_from_arcs(VolumeDims(2, 1, 1, 0), source=[(1, 7)])
    state = FlowState.fresh(store)
    assert initialize_preflow(store, state) == [1]
    assert state.excess[1] == 7
    assert store.get(1, store.dims.source_slot) == 0


def test_initialize_chain():
    store = store_from_arcs(VolumeDims(1, 1, 1, 0), source=[(0, 3)], sink=[(0, 5)])
    state = FlowState.fresh(store)
    initialize_preflow(store, state)
    assert state.excess[0] == 3
    assert state.label[0] == 1


def _two_vertex_chain(cap):
    store = store_from_arcs(VolumeDims(2, 1, 1, 0), arcs=[(0, UP, cap)])
    state = FlowState.fresh(store)
    state.label[0], state.label[1] = 2, 1
    return store, state


def test_push_limited_by_residual():
    store, state = _two_vertex_chain(3)
    state.excess[0] = 5
    assert push(store, state, 0, UP) == 3
    assert store.get(0, UP) == 0 and store.get(1, DOWN) == 3
    assert state.excess == [2, 3]


def test_push_limited_by_excess():
    store, state = _two_vertex_chain(9)
    state.excess[0] = 2
    assert push(store, state, 0, UP) == 2
    assert not state.is_active(0)


def test_push_inadmissible_is_noop():
    store, state = _two_vertex_chain(9)
    state.excess[0] = 2
    state.label[0] = 1
    assert push(store, state, 0, UP) == 0
    assert state.excess == [2, 0]


def test_push_activates_target_and_enqueues():
    store, state = _two_vertex_chain(9)
    state.excess[0] = 2
    queued = []
    discharge(store, state, 0, queued.append)
    assert queued == [1]
    assert state.excess[1] == 2


def test_relabel_min_plus_one():
    dims = VolumeDims(3, 2, 1, 0)
    mid = 1
    right = dims.column_size + 1
    store = store_from_arcs(dims, arcs=[(mid, UP, 1), (mid, DOWN, 1),
                                        (mid, dims.lateral_slot(RIGHT, 0), 1)])
    state = FlowState.fresh(store)
    state.label[2], state.label[0], state.label[right] = 3, 5, 7
    assert relabel(store, state, mid) == 4


def test_relabel_without_residual_edges_is_sentinel():
    store = store_from_arcs(VolumeDims(3, 2, 1, 0))
    state = FlowState.fresh(store)
    assert relabel(store, state, 1) == 2 * store.dims.n + 1


def test_relabel_never_decreases():
    store, state = _two_vertex_chain(9)
    state.label[0] = 5
    assert relabel(store, state, 0) == 5


def _distances_to_sink(store):
    edges = store_to_edge_list(store)
    g = nx.DiGraph()
    g.add_nodes_from(range(edges.num_nodes))
    g.add_edges_from((u, v) for u, v, c in edges.edges if c)
    return nx.single_source_shortest_path_length(g.reverse(), edges.sink)


def test_global_relabel_fresh_graph_is_bfs_distance(rng):
    for _ in range(30):
        store = random_store(rng)
        state = FlowState.fresh(store)
        global_relabel_serial(store, state)
        dist = _distances_to_sink(store)
        for v in range(store.dims.n):
            if v in dist:
                assert state.label[v] == dist[v]
            else:
                assert state.label[v] >= store.dims.n


def test_global_relabel_after_saturating_sink_arc():
    store = store_from_arcs(VolumeDims(1, 1, 1, 0), source=[(0, 9)], sink=[(0, 4)])
    state = FlowState.fresh(store)
    global_relabel_serial(store, state)
    assert state.label[0] == 1
    store.set(0, store.dims.sink_slot, 0)
    global_relabel_serial(store, state)
    assert state.label[0] >= state.n


def test_global_relabel_period_counts_discharges():
    store = random_store(np.random.default_rng(3), max_rows=6, max_columns=4, min_columns=4)
    lazy = push_relabel_maxflow(store, gr_factor=2.0)
    eager = push_relabel_maxflow(store, gr_factor=1.0)
    n = store.dims.n
    assert lazy.value == eager.value
    # one relabel at init plus one per full period of discharges
    assert lazy.stats["global_relabels"] == 1 + lazy.stats["discharges"] // (2 * n)
    assert eager.stats["global_relabels"] == 1 + eager.stats["discharges"] // n


def test_min_cut_examples():
    result = push_relabel_maxflow(diamond_store())
    assert min_cut(result.instance, result.residual).cut_capacity == 2
    dims = VolumeDims(1, 1, 1, 0)
    single = store_from_arcs(dims, source=[(0, 9)], sink=[(0, 20)])
    result = push_relabel_maxflow(single)
    cut = min_cut(result.instance, result.residual)
    assert cut.source_side == {SOURCE}
    assert cut.cut_capacity == 9 == result.value


def test_min_cut_rejects_non_maximal_flow():
    store = diamond_store()
    with pytest.raises(FlowNotMaximalError):
        min_cut(store, store.copy())


def _check_solved(result, expected):
    assert result.value == expected
    assert flow_violations(result.instance, result.residual, result.value) == []
    assert min_cut(result.instance, result.residual).cut_capacity == expected


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_solvers_agree_with_oracle(seed):
    store = random_store(np.random.default_rng(seed))
    expected = oracle_maxflow(store_to_edge_list(store)).value
    pr = push_relabel_maxflow(store)
    _check_solved(pr, expected)
    _check_solved(bk_maxflow(store), expected)
    assert label_violations(pr.residual, pr.state.label) == []
    lifted = [v for v in range(store.dims.n)
              if pr.state.excess[v] and pr.state.label[v] < pr.state.n]
    assert lifted == []


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_2x2x1_k1_oracle_equivalence(seed):
    rng = np.random.default_rng(seed)
    dims = VolumeDims(2, 2, 1, 1)
    caps = rng.integers(0, 10, dims.half_edges) * slot_exists_mask(dims).ravel()
    store = CapacityStore(dims, caps.astype("<u4"))
    expected = oracle_maxflow(store_to_edge_list(store)).value
    assert push_relabel_maxflow(store).value == expected
    assert bk_maxflow(store).value == expected


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_label_validity_after_global_relabel_mid_run(seed):
    rng = np.random.default_rng(seed)
    store = random_store(rng)
    state = FlowState.fresh(store)
    queue = deque(initialize_preflow(store, state))
    steps = int(rng.integers(0, 3 * store.dims.n + 1))
    for _ in range(steps):
        if not queue:
            break
        v = queue.popleft()
        if state.is_active(v):
            discharge(store, state, v, queue.append)
    global_relabel_serial(store, state)
    assert label_violations(store, state.label, state.source_capacity) == []


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_oracle_matches_networkx(seed):
    store = random_store(np.random.default_rng(seed))
    graph = store_to_edge_list(store)
    g = nx.DiGraph()
    g.add_nodes_from(range(graph.num_nodes))
    for u, v, c in graph.edges:
        if g.has_edge(u, v):
            g[u][v]["capacity"] += c
        else:
            g.add_edge(u, v, capacity=c)
    assert oracle_maxflow(graph).value == nx.maximum_flow_value(g, graph.source, graph.sink)
