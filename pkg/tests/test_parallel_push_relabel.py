from __future__ import annotations

import copy
import threading
from collections import deque

import numpy as np
import pytest

from conftest import random_store, store_from_arcs
from gridflow.cut import flow_violations, min_cut
from gridflow.errors import TooManySegmentsError
from gridflow.oracle import _neighbor, oracle_maxflow, store_to_edge_list
from gridflow.parallel import (
    ParallelPushRelabel,
    RWLock,
    level_synchronized_global_relabel,
    partition,
    pr_parallel_maxflow,
)
from gridflow.preflow import (
    FlowState,
    discharge,
    global_relabel_serial,
    initialize_preflow,
    push_relabel_maxflow,
)
from gridflow.solve import default_gr_factor
from gridflow.structured_graph import LEFT, RIGHT, CapacityStore, VolumeDims, mate


def test_partition_even_split():
    p = partition(VolumeDims(2, 8, 1, 1), 4)
    assert p.column_ranges == [(0, 2), (2, 4), (4, 6), (6, 8)]


def test_partition_remainder_goes_first():
    p = partition(VolumeDims(2, 7, 1, 1), 2)
    assert [b - a for a, b in p.column_ranges] == [4, 3]


def test_partition_vertex_counts_differ_by_at_most_one_column():
    for columns in range(1, 12):
        dims = VolumeDims(3, columns, 2, 1)
        for k in range(1, columns + 1):
            sizes = [len(partition(dims, k).vertex_range(i)) for i in range(k)]
            assert sum(sizes) == dims.n
            assert max(sizes) - min(sizes) <= dims.column_size


def test_partition_lockable_columns_around_boundary():
    dims = VolumeDims(3, 8, 2, 1)
    p = partition(dims, 2)
    assert p.boundaries() == [4]
    lockable_columns = {c for c in range(8)
                        if all(p.lockable[v] for v in range(c * dims.column_size,
                                                            (c + 1) * dims.column_size))}
    assert lockable_columns == {3, 4}
    assert not any(p.lockable[2 * dims.column_size:3 * dims.column_size])


def test_partition_lockable_matches_cross_segment_adjacency():
    for dims, k in [(VolumeDims(4, 9, 2, 2), 3), (VolumeDims(3, 5, 3, 0), 5),
                    (VolumeDims(1, 6, 1, 1), 2)]:
        p = partition(dims, k)
        probe = CapacityStore(dims)
        for v in range(dims.n):
            crosses = any(
                (m := mate(v, slot, probe)) is not None
                and p.segment_of(m[0]) != p.segment_of(v)
                for slot in range(dims.lateral_end)
            )
            assert bool(p.lockable[v]) == crosses


def test_partition_rejects_too_many_segments():
    with pytest.raises(TooManySegmentsError):
        partition(VolumeDims(2, 3, 1, 1), 4)


def _chain(columns=4, source=5, cap=3, sink=4):
    """One-row chain along the column axis: s -> col 0 -> ... -> col C-1 -> t."""
    dims = VolumeDims(1, columns, 1, 0)
    arcs = [(c, dims.lateral_slot(RIGHT, 0), cap) for c in range(columns - 1)]
    return store_from_arcs(dims, source=[(0, source)], sink=[(columns - 1, sink)], arcs=arcs)


def test_single_segment_matches_serial(rng):
    for _ in range(40):
        store = random_store(rng)
        assert pr_parallel_maxflow(store, 1).value == push_relabel_maxflow(store).value


def test_only_path_crosses_boundary():
    store = _chain(columns=6, source=7, cap=5, sink=9)
    for segments in (2, 3, 6):
        result = pr_parallel_maxflow(store, segments)
        assert result.value == 5
        assert flow_violations(store, result.residual, result.value) == []


def test_idle_worker_terminates():
    dims = VolumeDims(2, 4, 1, 0)
    store = store_from_arcs(dims, source=[(0, 3)], sink=[(1, 2)], arcs=[(0, 0, 4)])
    result = pr_parallel_maxflow(store, 2)
    assert result.value == 2
    assert result.stats["terminations"] == 1


def _solver_ready(store, segments):
    solver = ParallelPushRelabel(store, segments)
    solver.initialize()
    return solver


def test_interior_push_takes_no_lock():
    store = _chain(columns=8)
    solver = _solver_ready(store, 2)
    assert not solver.partition.lockable[0] and not solver.partition.lockable[1]
    wk = solver.owner(0)
    v = solver._pop(wk)
    assert v == 0
    # a held lock anywhere lockable would not matter for 0 -> 1
    for lock in solver.locks:
        if lock is not None:
            lock.acquire()
    solver.apply_vertex(wk, v, solver.residual.view)
    assert solver.state.excess[1] == 3
    assert wk.lock_misses == 0


def test_contended_lock_requeues_with_cursor():
    store = _chain(columns=4)
    solver = _solver_ready(store, 2)
    dims = store.dims
    assert solver.partition.lockable[1] and not solver.partition.lockable[0]
    wk = solver.owner(0)
    v = solver._pop(wk)
    slot = dims.lateral_slot(RIGHT, 0)
    solver.state.cursor[v] = 0
    with solver.locks[1]:
        solver.apply_vertex(wk, v, solver.residual.view)
    assert wk.lock_misses == 1
    assert solver.state.cursor[v] == slot
    assert list(wk.queue) == [v]
    assert solver.state.excess[v] == 5
    solver.apply_vertex(wk, solver._pop(wk), solver.residual.view)
    assert solver.state.excess[1] == 3


def test_cross_segment_push_enqueues_on_neighbor():
    store = _chain(columns=4)
    solver = _solver_ready(store, 2)
    res = solver.residual.view
    first, second = solver.workers
    solver.apply_vertex(first, solver._pop(first), res)
    v = solver._pop(first)
    assert v == 1
    with solver.locks[1]:
        solver.apply_vertex(first, v, res)
    assert list(second.queue) == [2]
    assert solver.owner(2) is second


def test_enqueue_clears_empty_flag():
    store = _chain(columns=4)
    solver = _solver_ready(store, 2)
    second = solver.workers[1]
    second.empty = True
    solver.enqueue(3)
    assert second.empty is False


def test_is_queue_empty_sets_terminate_once():
    solver = _solver_ready(_chain(columns=4), 2)
    solver.workers[0].empty = True
    assert solver.is_queue_empty() is False
    assert solver.terminate is False
    for wk in solver.workers:
        wk.empty = True
    assert solver.is_queue_empty() is True
    assert solver.is_queue_empty() is True
    assert solver.terminate is True and solver.terminations == 1


def test_is_queue_empty_false_while_wave_pending():
    solver = _solver_ready(_chain(columns=4), 2)
    for wk in solver.workers:
        wk.empty = True
    solver.wave_pending = True
    assert solver.is_queue_empty() is False


def test_discharge_counter_tick():
    store = _chain(columns=4)
    solver = ParallelPushRelabel(store, 1, gr_factor=2.0, tick=1000)
    assert solver.threshold == 2 * store.dims.n
    solver.threshold = 2500
    solver._count_discharges(1000)
    solver._count_discharges(1000)
    assert not solver.wave_event.is_set()
    solver._count_discharges(1000)
    assert solver.wave_event.is_set()
    # staleness: each worker holds back fewer than `tick` discharges
    assert solver.counter - solver.threshold < 1000 * len(solver.workers)


def test_gr_factor_defaults():
    # gamma = 2 on a million vertices means a wave every two million discharges
    assert default_gr_factor(10**6) * 10**6 == 2 * 10**6
    assert default_gr_factor(20_000_000) == 1.0


def test_waves_follow_threshold():
    store = random_store(np.random.default_rng(11), max_rows=6, min_columns=4, max_columns=4,
                         density=1.0)
    result = pr_parallel_maxflow(store, 2, gr_factor=1.0, tick=1)
    n = store.dims.n
    assert result.stats["waves"] <= result.stats["discharges"] // n
    assert result.value == oracle_maxflow(store_to_edge_list(store)).value


def _mid_run_state(store, rng):
    state = FlowState.fresh(store)
    queue = deque(initialize_preflow(store, state))
    for _ in range(int(rng.integers(0, 2 * store.dims.n + 1))):
        if not queue:
            break
        v = queue.popleft()
        if state.is_active(v):
            discharge(store, state, v, queue.append)
    return state


def _bfs_to_sink(store):
    """Reverse residual BFS from t, neighbours computed from coordinates."""
    dims = store.dims
    t = dims.n + 1
    res = store.blocks()
    preds: dict[int, set[int]] = {}
    for v in range(dims.n):
        if res[v, dims.sink_slot]:
            preds.setdefault(t, set()).add(v)
        for slot in range(dims.lateral_end):
            if res[v, slot]:
                preds.setdefault(_neighbor(dims, v, slot), set()).add(v)
    dist = {t: 0}
    queue = deque([t])
    while queue:
        x = queue.popleft()
        for u in preds.get(x, ()):
            if u not in dist:
                dist[u] = dist[x] + 1
                queue.append(u)
    del dist[t]
    return dist


@pytest.mark.parametrize("segments", [1, 2, 3])
def test_quiescent_wave_matches_bfs(segments):
    rng = np.random.default_rng(100 + segments)
    for _ in range(25):
        store = random_store(rng, min_columns=3)
        state = _mid_run_state(store, rng)
        dist = _bfs_to_sink(store)
        reached = level_synchronized_global_relabel(store, state, segments)
        assert reached == set(dist)
        for v in reached:
            assert state.label[v] == dist[v]
        for v in set(range(state.n)) - reached:
            assert state.label[v] >= state.n


def test_wave_agrees_with_serial_relabel_on_reached_vertices(rng):
    for _ in range(20):
        store = random_store(rng, min_columns=2)
        state = _mid_run_state(store, rng)
        serial_store, serial_state = store.copy(), copy.deepcopy(state)
        global_relabel_serial(serial_store, serial_state)
        reached = level_synchronized_global_relabel(store, state, 2)
        for v in reached:
            assert state.label[v] == serial_state.label[v]


def test_shared_vertex_gets_minimum_level():
    # t hangs off both ends; column 1 is 2 hops from the left end and 3 from the right
    dims = VolumeDims(1, 4, 1, 0)
    arcs = []
    for c in range(3):
        arcs.append((c, dims.lateral_slot(RIGHT, 0), 1))
        arcs.append((c + 1, dims.lateral_slot(LEFT, 0), 1))
    store = store_from_arcs(dims, sink=[(0, 1), (3, 1)], arcs=arcs)
    state = FlowState.fresh(store)
    reached = level_synchronized_global_relabel(store, state, 2)
    assert reached == {0, 1, 2, 3}
    assert state.label == [1, 2, 2, 1]
    assert state.wave == [1, 1, 1, 1]


def test_wave_without_seeds_is_noop():
    dims = VolumeDims(2, 3, 1, 1)
    store = store_from_arcs(dims, source=[(0, 4)], arcs=[(0, 0, 2)])
    state = FlowState.fresh(store)
    before = list(state.label)
    reached = level_synchronized_global_relabel(store, state, 3)
    assert reached == set()
    assert all(new >= max(old, state.n) for old, new in zip(before, state.label))


@pytest.mark.parametrize("seed", range(12))
def test_stress_with_jitter(seed):
    rng = np.random.default_rng(seed)
    store = random_store(rng, min_columns=8, max_columns=8, max_slices=2, max_rows=4)
    expected = oracle_maxflow(store_to_edge_list(store)).value
    result = pr_parallel_maxflow(store, 8, gr_factor=1.0, tick=1, jitter=0.3, seed=seed,
                                 debug=True)
    assert result.value == expected
    assert result.stats["post_condition_violations"] == 0
    assert result.stats["terminations"] == 1
    assert min_cut(store, result.residual).cut_capacity == expected


@pytest.mark.parametrize("segments", [1, 2, 4, 8])
def test_values_invariant_across_segment_counts(segments, rng):
    for _ in range(10):
        store = random_store(rng, min_columns=8, max_columns=8, max_slices=2)
        assert pr_parallel_maxflow(store, segments).value == push_relabel_maxflow(store).value


def test_thread_cap_maps_segments_onto_fewer_workers(monkeypatch):
    monkeypatch.setenv("GRIDFLOW_THREADS", "2")
    store = _chain(columns=8)
    solver = ParallelPushRelabel(store, 8)
    assert len(solver.workers) == 2
    assert [wk.segments for wk in solver.workers] == [[0, 1, 2, 3], [4, 5, 6, 7]]
    assert solver.run().value == 3


def test_rwlock_readers_share_writers_exclude():
    lock = RWLock()
    inside = []
    with lock.read():
        got = threading.Event()

        def reader():
            with lock.read():
                got.set()

        t = threading.Thread(target=reader)
        t.start()
        assert got.wait(1.0)
        t.join()

        def writer():
            with lock.write():
                inside.append("w")

        w = threading.Thread(target=writer)
        w.start()
        w.join(0.05)
        assert inside == []
    w.join(1.0)
    assert inside == ["w"]
