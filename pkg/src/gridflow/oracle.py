"""Reference maxflow on explicit edge lists (shortest augmenting paths).

Used only to cross-check the structured solvers.  Conversion from a
:class:`CapacityStore` recomputes every neighbour from coordinates, so it
does not share code paths with the offset cache.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .structured_graph import DIRECTION_STEP, CapacityStore, VolumeDims


@dataclass
class EdgeListGraph:
    """Directed multigraph on ``0 .. num_nodes - 1`` with distinguished terminals."""

    num_nodes: int
    source: int
    sink: int
    edges: list[tuple[int, int, int]]


@dataclass
class OracleResult:
    value: int
    source_side: set[int]
    flow: dict[tuple[int, int], int]


def store_to_edge_list(store: CapacityStore) -> EdgeListGraph:
    """Explicit arcs of a structured instance; ``s = n`` and ``t = n + 1``."""
    dims = store.dims
    n = dims.n
    s, t = n, n + 1
    blocks = store.blocks()
    edges = []
    for v in range(n):
        row = blocks[v].tolist()
        if row[dims.source_slot]:
            edges.append((s, v, row[dims.source_slot]))
        if row[dims.sink_slot]:
            edges.append((v, t, row[dims.sink_slot]))
        for slot in range(dims.lateral_end):
            cap = row[slot]
            if cap:
                edges.append((v, _neighbor(dims, v, slot), cap))
    return EdgeListGraph(n + 2, s, t, edges)


def _neighbor(dims: VolumeDims, v: int, slot: int) -> int:
    c, s, r = dims.coords(v)
    kind, direction, dr = dims.slot_kind(slot)
    dc, ds = (0, 0) if kind != "lateral" else DIRECTION_STEP[direction]
    c2, s2, r2 = c + dc, s + ds, r + dr
    if not (0 <= c2 < dims.columns and 0 <= s2 < dims.slices and 0 <= r2 < dims.rows):
        raise ValueError(f"capacity on edge leaving the grid: vertex {v}, slot {slot}")
    return (c2 * dims.slices + s2) * dims.rows + r2


def oracle_maxflow(graph: EdgeListGraph) -> OracleResult:
    """Edmonds-Karp; parallel arcs are merged."""
    cap: list[dict[int, int]] = [dict() for _ in range(graph.num_nodes)]
    for u, v, c in graph.edges:
        if c < 0:
            raise ValueError(f"negative capacity on arc {u}->{v}")
        if u == v or c == 0:
            continue
        cap[u][v] = cap[u].get(v, 0) + c
        cap[v].setdefault(u, 0)
    original = [dict(a) for a in cap]
    s, t = graph.source, graph.sink
    value = 0
    while True:
        parent = {s: None}
        queue = deque([s])
        while queue and t not in parent:
            u = queue.popleft()
            for w, r in cap[u].items():
                if r > 0 and w not in parent:
                    parent[w] = u
                    queue.append(w)
        if t not in parent:
            break
        bottleneck = None
        w = t
        while parent[w] is not None:
            u = parent[w]
            r = cap[u][w]
            bottleneck = r if bottleneck is None else min(bottleneck, r)
            w = u
        w = t
        while parent[w] is not None:
            u = parent[w]
            cap[u][w] -= bottleneck
            cap[w][u] += bottleneck
            w = u
        value += bottleneck
    flow = {}
    for u in range(graph.num_nodes):
        for w, c in original[u].items():
            f = c - cap[u][w]
            if f > 0:
                flow[(u, w)] = f
    return OracleResult(value, set(parent), flow)
