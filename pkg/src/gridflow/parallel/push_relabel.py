"""Parallel push-relabel over column segments.

Each worker owns a contiguous range of columns and a FIFO of its active
vertices.  Vertices in the two column slabs around a segment boundary are
lockable: they are touched by two workers, so their excess, label and edge
residuals change only under the vertex's mutex.  Everything else is owned
by exactly one worker and needs no locking.

Global relabeling runs as numbered waves.  A supervisor thread starts a
wave once enough discharges have accumulated; every worker finishes its
current vertex and joins a barrier, and the reverse BFS from the sink then
advances one level per barrier round.  Waves and termination exclude each
other through a reader/writer lock that also guards the per-worker
empty-queue flags.
"""

from __future__ import annotations

import math
import os
import random
import threading
import time
from collections import deque

from ..preflow import DEFAULT_GR_FACTOR, FlowResult, FlowState, initialize_preflow
from ..structured_graph import CapacityStore
from .partition import Partition, partition
from .sync import RWLock

DEFAULT_TICK = 1000
IDLE_SLEEP = 0.0002


class _Worker:
    def __init__(self, index: int, segments: list[int], seed: int):
        self.index = index
        self.segments = segments
        self.queue: deque = deque()
        self.qlock = threading.Lock()
        self.empty = False
        self.levels = (deque(), deque())
        self.tally = 0
        self.flow = 0
        self.discharges = 0
        self.lock_misses = 0
        self.unreached: list[int] = []
        self.rng = random.Random(seed)


def _thread_cap() -> int | None:
    value = os.environ.get("GRIDFLOW_THREADS")
    return max(1, int(value)) if value else None


class ParallelPushRelabel:
    """One solve of one instance; call :meth:`run` once.

    ``tick`` is the number of local discharges between updates of the shared
    discharge counter.  ``jitter`` is the probability of yielding the
    interpreter at each scheduling point, used by stress tests.
    """

    def __init__(self, instance: CapacityStore, segments: int = 1,
                 gr_factor: float = DEFAULT_GR_FACTOR, tick: int = DEFAULT_TICK,
                 jitter: float = 0.0, seed: int = 0, threads: int | None = None,
                 debug: bool = False):
        self.instance = instance
        self.dims = instance.dims
        self.partition: Partition = partition(self.dims, segments)
        self.residual = instance.copy()
        self.state = FlowState.fresh(instance)
        self.gr_factor = gr_factor
        self.threshold = max(1, math.ceil(gr_factor * self.dims.n))
        self.tick = max(1, int(tick))
        self.jitter = jitter
        self.debug = debug

        cap = _thread_cap()
        count = threads or segments
        if cap is not None:
            count = min(count, cap)
        count = max(1, min(count, segments))
        self.workers = [
            _Worker(i, list(range(i * segments // count, (i + 1) * segments // count)),
                    seed * 1_000_003 + i)
            for i in range(count)
        ]
        worker_of_segment = [0] * segments
        for wk in self.workers:
            for seg in wk.segments:
                worker_of_segment[seg] = wk.index
        self.worker_of_column = [worker_of_segment[s] for s in self.partition.segment_of_column]

        n = self.dims.n
        lockable = self.partition.lockable
        self.locks = [threading.Lock() if lockable[v] else None for v in range(n)]
        self.queued = bytearray(n)

        self.rw = RWLock()
        self.terminate = False
        self.terminations = 0
        self.wave_pending = False
        self.wave_event = threading.Event()
        self.counter = 0
        self.counter_lock = threading.Lock()
        self.barrier = threading.Barrier(len(self.workers) + 1)
        self.current_wave = 0
        self.wave_level = 0
        self.wave_done = False
        self.waves = 0
        self.errors: list[BaseException] = []

    # ------------------------------------------------------------------ queues

    def owner(self, v: int) -> _Worker:
        return self.workers[self.worker_of_column[v // self.dims.column_size]]

    def enqueue(self, w: int):
        wk = self.owner(w)
        with wk.qlock:
            if self.queued[w]:
                return
            self.queued[w] = 1
            wk.queue.append(w)
            if wk.empty:
                with self.rw.write():
                    wk.empty = False

    def _pop(self, wk: _Worker) -> int | None:
        with wk.qlock:
            if not wk.queue:
                return None
            v = wk.queue.popleft()
            self.queued[v] = 0
            return v

    def _maybe_yield(self, wk: _Worker):
        if self.jitter and wk.rng.random() < self.jitter:
            time.sleep(0 if wk.rng.random() < 0.5 else 1e-5)

    def _count_discharges(self, amount: int):
        with self.counter_lock:
            self.counter += amount
            if self.counter >= self.threshold:
                self.wave_event.set()

    # ---------------------------------------------------------------- discharge

    def apply_vertex(self, wk: _Worker, v: int, res) -> None:
        """Discharge ``v`` from its cursor; ``v`` is already locked if lockable."""
        st = self.state
        dims = self.dims
        excess = st.excess
        label = st.label
        if excess[v] <= 0 or label[v] >= st.disconnected_label:
            return
        wk.discharges += 1
        wk.tally += 1
        if wk.tally >= self.tick:
            self._count_discharges(wk.tally)
            wk.tally = 0

        epn = dims.edges_per_node
        base = v * epn
        lockable = self.partition.lockable
        locks = self.locks
        d = label[v]
        start = st.cursor[v]
        for slot, dm, dw in self.residual.cache.neighbor_table[v % dims.column_size]:
            if slot < start:
                continue
            e = base + slot
            r = res[e]
            if not r:
                continue
            w = v + dw
            lock = locks[w] if lockable[w] else None
            if lock is not None:
                if not lock.acquire(blocking=False):
                    wk.lock_misses += 1
                    st.cursor[v] = slot
                    self.enqueue(v)
                    return
                self._maybe_yield(wk)
            activated = False
            try:
                if d == label[w] + 1:
                    if self.debug and st.wave[v] != st.wave[w]:
                        raise AssertionError(f"push {v}->{w} across wave numbers")
                    ex = excess[v]
                    delta = r if r < ex else ex
                    res[e] = r - delta
                    res[e + dm] += delta
                    excess[v] = ex - delta
                    activated = excess[w] == 0
                    excess[w] += delta
            finally:
                if lock is not None:
                    lock.release()
            if activated:
                self.enqueue(w)
            if excess[v] == 0:
                st.cursor[v] = slot
                return

        ex = excess[v]
        if d == 1:
            e = base + dims.sink_slot
            r = res[e]
            if r:
                delta = r if r < ex else ex
                res[e] = r - delta
                excess[v] = ex - delta
                wk.flow += delta
        elif d == st.source_label + 1:
            e = base + dims.source_slot
            back = st.source_capacity[v] - res[e]
            if back > 0:
                delta = back if back < ex else ex
                res[e] += delta
                excess[v] = ex - delta
        if excess[v] == 0:
            st.cursor[v] = dims.lateral_end
            return

        newd = st.disconnected_label
        for slot, _dm, dw in self.residual.cache.neighbor_table[v % dims.column_size]:
            if res[base + slot]:
                cand = label[v + dw] + 1
                if cand < newd:
                    newd = cand
        if res[base + dims.sink_slot]:
            newd = 1
        elif st.source_capacity[v] - res[base + dims.source_slot] > 0:
            newd = min(newd, st.source_label + 1)
        if newd > label[v]:
            label[v] = newd
        st.cursor[v] = 0
        if label[v] < st.disconnected_label:
            self.enqueue(v)

    # ----------------------------------------------------------- worker thread

    def _worker_main(self, wk: _Worker):
        res = self.residual.view
        lockable = self.partition.lockable
        locks = self.locks
        global_check = True
        while True:
            while True:
                if self.wave_pending:
                    self._wave(wk, res)
                    global_check = True
                v = self._pop(wk)
                if v is None:
                    break
                self._maybe_yield(wk)
                if lockable[v]:
                    with locks[v]:
                        self.apply_vertex(wk, v, res)
                else:
                    self.apply_vertex(wk, v, res)
                global_check = True
            if wk.tally:
                self._count_discharges(wk.tally)
                wk.tally = 0
            if self.terminate:
                return
            if self.wave_pending:
                continue
            if global_check:
                with wk.qlock:
                    if wk.queue:
                        continue
                    if not wk.empty:
                        with self.rw.write():
                            wk.empty = True
                if self.is_queue_empty():
                    return
                global_check = False
            time.sleep(IDLE_SLEEP)

    def is_queue_empty(self) -> bool:
        """All-empty check under shared access; sets the terminate flag."""
        with self.rw.read():
            if self.wave_pending:
                return False
            if all(wk.empty for wk in self.workers):
                with self.counter_lock:
                    if not self.terminate:
                        self.terminate = True
                        self.terminations += 1
                self.wave_event.set()
                return True
        return False

    # ---------------------------------------------------------- supervisor

    def _supervisor_main(self):
        while True:
            self.wave_event.wait(0.05)
            self.wave_event.clear()
            if self.terminate:
                return
            with self.counter_lock:
                ready = self.counter >= self.threshold
                if ready:
                    self.counter = 0
            if not ready:
                continue
            with self.rw.write():
                if self.terminate:
                    return
                self.wave_pending = True
            self._wave(None, None)

    # ----------------------------------------------------------------- waves

    def _entry_action(self):
        self.current_wave += 1
        self.wave_level = 0
        self.wave_done = False

    def _level_action(self):
        self.wave_level += 1
        nxt = self.wave_level % 2
        self.wave_done = all(not wk.levels[nxt] for wk in self.workers)

    def _exit_action(self):
        self.waves += 1
        self.wave_pending = False

    def _barrier(self, action):
        if self.barrier.wait() == 0:
            action()
        self.barrier.wait()

    def _wave(self, wk: _Worker | None, res):
        """One wave; called by every worker and by the supervisor."""
        self._barrier(self._entry_action)
        if wk is not None:
            self._seed_level(wk, res)
        self._barrier(self._level_action)
        while not self.wave_done:
            if wk is not None:
                self._expand_level(wk, res, self.wave_level)
            self._barrier(self._level_action)
        if wk is not None:
            self._finish_wave(wk)
        self._barrier(self._exit_action)

    def _claim(self, w: int, new_label: int) -> bool:
        """First writer in this wave labels ``w``; returns True if it won."""
        st = self.state
        lock = self.locks[w]
        if lock is not None:
            lock.acquire()
        try:
            if st.wave[w] >= self.current_wave:
                return False
            st.wave[w] = self.current_wave
            if new_label > st.label[w]:
                st.label[w] = new_label
            return True
        finally:
            if lock is not None:
                lock.release()

    def _seed_level(self, wk: _Worker, res):
        dims = self.dims
        epn = dims.edges_per_node
        sink = dims.sink_slot
        out = wk.levels[1]
        for seg in wk.segments:
            for v in self.partition.vertex_range(seg):
                if res[v * epn + sink] and self._claim(v, 1):
                    out.append(v)

    def _expand_level(self, wk: _Worker, res, level: int):
        dims = self.dims
        epn = dims.edges_per_node
        sr = dims.column_size
        columns = dims.columns
        tables = self.residual.cache.bounded_tables
        wave = self.state.wave
        current = self.current_wave
        frontier = wk.levels[level % 2]
        nxt = (level + 1) % 2
        while frontier:
            x = frontier.popleft()
            c = x // sr
            base = x * epn
            table = tables[0 if c == 0 else (2 if c == columns - 1 else 1)][x % sr]
            for slot, dm, dw in table:
                w = x + dw
                if wave[w] < current and res[base + slot + dm] and self._claim(w, level + 1):
                    self.owner(w).levels[nxt].append(w)

    def _finish_wave(self, wk: _Worker):
        st = self.state
        n = st.n
        current = self.current_wave
        unreached = wk.unreached = []
        for seg in wk.segments:
            for v in self.partition.vertex_range(seg):
                if st.wave[v] < current:
                    unreached.append(v)
                    st.wave[v] = current
                    if st.label[v] < n:
                        st.label[v] = n
                st.cursor[v] = 0

    # ------------------------------------------------------------------- run

    def initialize(self):
        for v in initialize_preflow(self.residual, self.state):
            self.enqueue(v)

    def _guard(self, target, *args):
        try:
            target(*args)
        except BaseException as exc:  # surfaced by run()
            self.errors.append(exc)
            self.terminate = True
            self.barrier.abort()
            self.wave_event.set()

    def run(self) -> FlowResult:
        self.initialize()
        threads = [threading.Thread(target=self._guard, args=(self._worker_main, wk),
                                    name=f"gridflow-worker-{wk.index}", daemon=True)
                   for wk in self.workers]
        threads.append(threading.Thread(target=self._guard, args=(self._supervisor_main,),
                                        name="gridflow-supervisor", daemon=True))
        started = time.perf_counter()
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        elapsed = time.perf_counter() - started
        if self.errors:
            raise self.errors[0]
        value = sum(wk.flow for wk in self.workers)
        self.state.flow_value = value
        self.state.discharges = sum(wk.discharges for wk in self.workers)
        self.state.global_relabels += self.waves
        return FlowResult(
            value=value,
            instance=self.instance,
            residual=self.residual,
            backend="pr-parallel",
            stats={
                "segments": self.partition.segment_count,
                "workers": len(self.workers),
                "discharges": self.state.discharges,
                "waves": self.waves,
                "lock_misses": sum(wk.lock_misses for wk in self.workers),
                "terminations": self.terminations,
                "solve_seconds": elapsed,
            },
            state=self.state,
        )

    def post_condition_violations(self) -> list[int]:
        """Vertices still holding excess with a label below ``n``."""
        st = self.state
        return [v for v in range(st.n) if st.excess[v] > 0 and st.label[v] < st.n]


def pr_parallel_maxflow(instance: CapacityStore, segments: int = 1,
                        gr_factor: float = DEFAULT_GR_FACTOR, tick: int = DEFAULT_TICK,
                        jitter: float = 0.0, seed: int = 0, threads: int | None = None,
                        debug: bool = False) -> FlowResult:
    solver = ParallelPushRelabel(instance, segments, gr_factor, tick, jitter, seed,
                                 threads, debug)
    result = solver.run()
    result.stats["post_condition_violations"] = len(solver.post_condition_violations())
    return result


def level_synchronized_global_relabel(store: CapacityStore, state: FlowState,
                                      segments: int = 1) -> set[int]:
    """Run one wave on a quiescent state and return the vertices it reached.

    ``store`` and ``state`` are updated in place; unreached vertices are
    lifted to at least ``n`` exactly as inside a solve.
    """
    solver = ParallelPushRelabel(store, segments)
    solver.residual = store
    solver.state = state
    solver.current_wave = max(state.wave, default=0)
    solver.wave_pending = True
    runners = [threading.Thread(target=solver._guard,
                                args=(solver._wave, wk, store.view), daemon=True)
               for wk in solver.workers]
    runners.append(threading.Thread(target=solver._guard, args=(solver._wave, None, None),
                                    daemon=True))
    for t in runners:
        t.start()
    for t in runners:
        t.join()
    if solver.errors:
        raise solver.errors[0]
    unreached = set()
    for wk in solver.workers:
        unreached.update(wk.unreached)
    return set(range(state.n)) - unreached
