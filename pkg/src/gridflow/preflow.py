"""Serial FIFO push-relabel with periodic global relabeling.

The flow state keeps one excess, label, wave number and current-edge cursor
per vertex.  Labels follow the usual conventions: ``d(t) = 0``, ``d(s) = n``,
vertices that can only return flow to the source sit in ``[n + 1, 2n)``, and
``2n + 1`` marks a vertex with no residual out-edge at all.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

from .structured_graph import CapacityStore

DEFAULT_GR_FACTOR = 2.0


@dataclass
class FlowState:
    n: int
    excess: list[int]
    label: list[int]
    wave: list[int]
    cursor: list[int]
    source_capacity: list[int]
    flow_value: int = 0
    discharges: int = 0
    global_relabels: int = 0

    @classmethod
    def fresh(cls, instance: CapacityStore) -> "FlowState":
        n = instance.dims.n
        return cls(
            n=n,
            excess=[0] * n,
            label=[0] * n,
            wave=[0] * n,
            cursor=[0] * n,
            source_capacity=instance.source_capacities().tolist(),
        )

    @property
    def source_label(self) -> int:
        return self.n

    @property
    def disconnected_label(self) -> int:
        return 2 * self.n + 1

    def is_active(self, v: int) -> bool:
        return self.excess[v] > 0 and self.label[v] < self.disconnected_label


@dataclass
class FlowResult:
    value: int
    instance: CapacityStore
    residual: CapacityStore
    backend: str
    stats: dict = field(default_factory=dict)
    state: FlowState | None = None


def flow_value(instance: CapacityStore, residual: CapacityStore) -> int:
    """Net flow into the sink recovered from the sink-arc residuals."""
    sink_slot = instance.dims.sink_slot
    orig = instance.blocks()[:, sink_slot].astype("int64")
    now = residual.blocks()[:, sink_slot].astype("int64")
    return int((orig - now).sum())


def initialize_preflow(store: CapacityStore, state: FlowState) -> list[int]:
    """Saturate every source arc and label vertices by reverse BFS.

    Returns the vertices that became active, in index order.
    """
    res = store.view
    epn = store.dims.edges_per_node
    src = store.dims.source_slot
    active = []
    for v in range(state.n):
        e = v * epn + src
        cap = int(res[e])
        if cap:
            res[e] = 0
            state.excess[v] += cap
            active.append(v)
    global_relabel_serial(store, state)
    return active


def push(store: CapacityStore, state: FlowState, v: int, slot: int) -> int:
    """Push ``min(excess, residual)`` along ``(v, slot)`` if admissible.

    Returns the amount moved; 0 means the edge was not usable.
    """
    dims = store.dims
    res = store.view
    e = v * dims.edges_per_node + slot
    excess = state.excess[v]
    if excess <= 0:
        return 0
    d = state.label[v]
    if slot == dims.sink_slot:
        r = int(res[e])
        if r <= 0 or d != 1:
            return 0
        delta = min(excess, r)
        res[e] = r - delta
        state.excess[v] = excess - delta
        state.flow_value += delta
        return delta
    if slot == dims.source_slot:
        back = state.source_capacity[v] - int(res[e])
        if back <= 0 or d != state.source_label + 1:
            return 0
        delta = min(excess, back)
        res[e] += delta
        state.excess[v] = excess - delta
        return delta
    r = int(res[e])
    if r <= 0:
        return 0
    m = store.mate_half_edge(e)
    w = m // dims.edges_per_node
    if d != state.label[w] + 1:
        return 0
    delta = min(excess, r)
    res[e] = r - delta
    res[m] += delta
    state.excess[v] = excess - delta
    state.excess[w] += delta
    return delta


def relabel(store: CapacityStore, state: FlowState, v: int) -> int:
    """Raise ``d(v)`` to one more than its lowest residual neighbour.

    Labels never decrease; with no residual out-edge the vertex gets the
    disconnected sentinel ``2n + 1``.
    """
    dims = store.dims
    res = store.view
    epn = dims.edges_per_node
    base = v * epn
    label = state.label
    newd = state.disconnected_label
    for slot, _dm, dw in store.cache.neighbor_table[v % dims.column_size]:
        if res[base + slot]:
            cand = label[v + dw] + 1
            if cand < newd:
                newd = cand
    if res[base + dims.sink_slot]:
        newd = 1
    elif state.source_capacity[v] - int(res[base + dims.source_slot]) > 0:
        newd = min(newd, state.source_label + 1)
    if newd > label[v]:
        label[v] = newd
    return label[v]


def discharge(store: CapacityStore, state: FlowState, v: int, enqueue) -> None:
    """One pass over ``v``'s edge block from its cursor.

    Pushes on admissible edges, calling ``enqueue(w)`` for every grid vertex
    that turns active.  If the pass reaches the end of the block with excess
    left, ``v`` is relabeled, its cursor reset and ``enqueue(v)`` called.
    """
    dims = store.dims
    res = store.view
    epn = dims.edges_per_node
    base = v * epn
    label = state.label
    excess = state.excess
    lat_end = dims.lateral_end
    state.discharges += 1
    table = store.cache.neighbor_table[v % dims.column_size]
    start = state.cursor[v]
    d = label[v]
    for slot, dm, dw in table:
        if slot < start:
            continue
        e = base + slot
        r = res[e]
        if not r:
            continue
        w = v + dw
        if d != label[w] + 1:
            continue
        ex = excess[v]
        delta = r if r < ex else ex
        res[e] = r - delta
        res[e + dm] += delta
        excess[v] = ex - delta
        if excess[w] == 0:
            enqueue(w)
        excess[w] += delta
        if ex == delta:
            state.cursor[v] = slot
            return
    if start <= lat_end:
        if push(store, state, v, dims.source_slot) and excess[v] == 0:
            state.cursor[v] = lat_end
            return
    if push(store, state, v, dims.sink_slot) and excess[v] == 0:
        state.cursor[v] = dims.sink_slot
        return
    relabel(store, state, v)
    state.cursor[v] = 0
    if state.is_active(v):
        enqueue(v)


def global_relabel_serial(store: CapacityStore, state: FlowState) -> None:
    """Exact residual distances to the sink, then to the source.

    Vertices reaching ``t`` get their BFS distance; of the rest, those
    reaching ``s`` get ``n + distance``; anything else gets ``2n + 1``.
    All cursors are reset.
    """
    n = state.n
    dims = store.dims
    res = store.view
    epn = dims.edges_per_node
    sr = dims.column_size
    table = store.cache.neighbor_table
    unset = -1
    label = [unset] * n

    frontier = deque()
    sink_slot = dims.sink_slot
    for v in range(n):
        if res[v * epn + sink_slot]:
            label[v] = 1
            frontier.append(v)
    _reverse_bfs(res, table, epn, sr, n, label, frontier, unset)

    source_slot = dims.source_slot
    src_cap = state.source_capacity
    for v in range(n):
        if label[v] == unset and src_cap[v] - res[v * epn + source_slot] > 0:
            label[v] = n + 1
            frontier.append(v)
    _reverse_bfs(res, table, epn, sr, n, label, frontier, unset)

    disconnected = state.disconnected_label
    state.label[:] = [disconnected if d == unset else d for d in label]
    state.cursor[:] = [0] * n
    state.global_relabels += 1


def _reverse_bfs(res, table, epn, sr, n, label, frontier, unset):
    while frontier:
        x = frontier.popleft()
        dx = label[x] + 1
        base = x * epn
        for slot, dm, dw in table[x % sr]:
            w = x + dw
            if 0 <= w < n and label[w] == unset and res[base + slot + dm]:
                label[w] = dx
                frontier.append(w)


def discharge_fifo_loop(store: CapacityStore, state: FlowState,
                        gr_factor: float = DEFAULT_GR_FACTOR) -> int:
    """Run FIFO discharges to completion and return the flow value."""
    n = state.n
    queue = deque()
    queued = bytearray(n)

    def enqueue(w):
        if not queued[w]:
            queued[w] = 1
            queue.append(w)

    for v in initialize_preflow(store, state):
        enqueue(v)

    period = max(1, math.ceil(gr_factor * n))
    since_relabel = 0
    while queue:
        v = queue.popleft()
        queued[v] = 0
        if not state.is_active(v):
            continue
        discharge(store, state, v, enqueue)
        since_relabel += 1
        if since_relabel >= period:
            since_relabel = 0
            global_relabel_serial(store, state)
    return state.flow_value


def push_relabel_maxflow(instance: CapacityStore,
                         gr_factor: float = DEFAULT_GR_FACTOR) -> FlowResult:
    residual = instance.copy()
    state = FlowState.fresh(instance)
    value = discharge_fifo_loop(residual, state, gr_factor)
    return FlowResult(
        value=value,
        instance=instance,
        residual=residual,
        backend="pr-serial",
        stats={"discharges": state.discharges, "global_relabels": state.global_relabels},
        state=state,
    )
