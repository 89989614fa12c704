"""Minimum cut recovery and flow validity checks on structured instances."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import FlowNotMaximalError
from .structured_graph import SOURCE, CapacityStore, slot_exists_mask


@dataclass
class CutResult:
    """Source side of an s-t cut as a per-vertex mask (``s`` implied)."""

    in_source: np.ndarray
    cut_capacity: int

    @property
    def source_side(self) -> set[int]:
        return {SOURCE, *np.flatnonzero(self.in_source).tolist()}


def mate_indices(instance: CapacityStore) -> np.ndarray:
    """``(n, lateral_end)`` flat mate index per grid half-edge, -1 if none."""
    dims = instance.dims
    epn = dims.edges_per_node
    lat = dims.lateral_end
    mask = slot_exists_mask(dims)[:, :lat]
    delta = np.tile(instance.cache.delta[:, :, :lat].reshape(-1, lat), (dims.columns, 1))
    e = np.arange(dims.n, dtype=np.int64)[:, None] * epn + np.arange(lat)[None, :]
    return np.where(mask, e + np.where(mask, delta, 0), -1)


def residual_reachable(residual: CapacityStore) -> np.ndarray:
    """Vertices reachable from ``s`` through positive residual half-edges."""
    dims = residual.dims
    n = dims.n
    epn = dims.edges_per_node
    res = residual.view
    table = residual.cache.neighbor_table
    sr = dims.column_size
    seen = bytearray(n)
    frontier = deque()
    src = dims.source_slot
    for v in range(n):
        if res[v * epn + src]:
            seen[v] = 1
            frontier.append(v)
    while frontier:
        v = frontier.popleft()
        base = v * epn
        for slot, _dm, dw in table[v % sr]:
            if res[base + slot]:
                w = v + dw
                if not seen[w]:
                    seen[w] = 1
                    frontier.append(w)
    return np.frombuffer(bytes(seen), dtype=np.uint8).astype(bool)


def cut_capacity(instance: CapacityStore, in_source: np.ndarray) -> int:
    """Original capacity of all arcs leaving the source side."""
    dims = instance.dims
    blocks = instance.blocks().astype(np.int64)
    total = int(blocks[~in_source, dims.source_slot].sum())
    total += int(blocks[in_source, dims.sink_slot].sum())
    mates = mate_indices(instance)
    lat = dims.lateral_end
    valid = mates >= 0
    target = np.where(valid, mates, 0) // dims.edges_per_node
    crossing = valid & in_source[:, None] & ~in_source[target]
    total += int(blocks[:, :lat][crossing].sum())
    return total


def min_cut(instance: CapacityStore, residual: CapacityStore) -> CutResult:
    """Residual-reachability cut; raises if ``t`` is still reachable."""
    in_source = residual_reachable(residual)
    sink_res = residual.sink_capacities()
    if np.any(sink_res[in_source] > 0):
        raise FlowNotMaximalError("sink is reachable from the source in the residual graph")
    return CutResult(in_source, cut_capacity(instance, in_source))


def net_flow(instance: CapacityStore, residual: CapacityStore) -> np.ndarray:
    """Signed flow per half-edge, ``original - residual``, shape ``(n, epn)``.

    On a grid pair the two entries are negatives of each other.  The source
    slot holds flow on ``s -> v`` and the sink slot flow on ``v -> t``.
    """
    return instance.blocks().astype(np.int64) - residual.blocks().astype(np.int64)


def flow_violations(instance: CapacityStore, residual: CapacityStore,
                    value: int | None = None) -> list[str]:
    """Capacity, antisymmetry and conservation checks; empty list when valid."""
    dims = instance.dims
    lat = dims.lateral_end
    problems = []
    orig = instance.blocks().astype(np.int64)
    now = residual.blocks().astype(np.int64)
    f = orig - now
    mates = mate_indices(instance)
    valid = mates >= 0
    flat_f = f.ravel()
    flat_orig = orig.ravel()
    mate_f = np.where(valid, flat_f[np.where(valid, mates, 0)], 0)
    mate_orig = np.where(valid, flat_orig[np.where(valid, mates, 0)], 0)
    grid_f = f[:, :lat]
    if np.any(grid_f[valid] != -mate_f[valid]):
        problems.append("antisymmetry: f(v,w) != -f(w,v) on some grid pair")
    if np.any(grid_f[valid] > orig[:, :lat][valid]) or np.any(-grid_f[valid] > mate_orig[valid]):
        problems.append("capacity: flow exceeds capacity on some grid arc")
    if np.any(grid_f[~valid] != 0) or np.any(now[:, :lat][~valid] != 0):
        problems.append("capacity: flow on a non-existent edge")
    for name, slot in (("source", dims.source_slot), ("sink", dims.sink_slot)):
        col = f[:, slot]
        if np.any(col < 0) or np.any(col > orig[:, slot]):
            problems.append(f"capacity: {name} arc flow outside [0, c]")
    balance = f[:, dims.source_slot] - f[:, dims.sink_slot] - grid_f.sum(axis=1)
    if np.any(balance != 0):
        v = int(np.flatnonzero(balance)[0])
        problems.append(f"conservation: vertex {v} has imbalance {int(balance[v])}")
    into_sink = int(f[:, dims.sink_slot].sum())
    out_of_source = int(f[:, dims.source_slot].sum())
    if into_sink != out_of_source:
        problems.append("conservation: source outflow differs from sink inflow")
    if value is not None and into_sink != value:
        problems.append(f"value: reported {value} but sink inflow is {into_sink}")
    return problems


def label_violations(residual: CapacityStore, label: list[int],
                     source_capacity: list[int] | None = None) -> list[str]:
    """Valid-labeling check ``d(v) <= d(w) + 1`` on residual arcs (t = 0, s = n).

    With ``source_capacity`` the returning arcs ``v -> s`` are checked too.
    """
    dims = residual.dims
    n = dims.n
    epn = dims.edges_per_node
    res = residual.view
    table = residual.cache.neighbor_table
    problems = []
    for v in range(n):
        base = v * epn
        d = label[v]
        for slot, _dm, dw in table[v % dims.column_size]:
            if res[base + slot] and d > label[v + dw] + 1:
                problems.append(f"label: d({v})={d} > d({v + dw})+1 on slot {slot}")
        if res[base + dims.sink_slot] and d > 1:
            problems.append(f"label: d({v})={d} with residual arc to t")
        if (source_capacity is not None and d > n + 1
                and source_capacity[v] - res[base + dims.source_slot] > 0):
            problems.append(f"label: d({v})={d} with residual arc to s")
    return problems
