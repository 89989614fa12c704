"""Optimal net surfaces through a minimum s-t cut.

A net surface picks one row ``h(p)`` in every column ``p = (c, s)``.  Its
objective is the sum of the vertex weights it passes through plus, for every
pair of laterally adjacent columns ``p`` and ``q`` (``q`` to the right of or
behind ``p``), a convex cost ``g(h(q) - h(p))`` defined on ``[-K, K]``.
Differences beyond ``K`` are infeasible.

The reduction puts vertex ``(p, r)`` on the source side iff ``h(p) >= r``:

* infinite downward arcs keep each column's source side downward closed;
* vertex weights become first differences along the column, paid through
  the source or sink arc depending on sign, and the bottom row is pulled to
  the source side by subtracting a large constant ``M``;
* ``g`` is split into a constant, a linear part folded into the unary
  terms, and hinge functions ``max(0, d - m)`` weighted by its second
  differences, each realised by one lateral arc per row;
* infinite arcs at offset ``-K`` enforce ``|h(q) - h(p)| <= K``.

"Infinite" is ``1 + total source capacity``, which no minimum cut can use.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .cut import CutResult
from .errors import CapacityOverflowError, EmptyColumnError, NonConvexPriorError
from .structured_graph import (
    BACK,
    CAPACITY_MAX,
    DOWN,
    FRONT,
    LEFT,
    RIGHT,
    CapacityStore,
    VolumeDims,
    vertex_index,
)


@dataclass
class SurfaceWeights:
    """Vertex weights ``(C, S, R)`` and one convex cost table over ``-K .. K``."""

    weights: np.ndarray
    edge_cost: np.ndarray

    def __post_init__(self):
        self.weights = np.asarray(self.weights)
        self.edge_cost = np.asarray(self.edge_cost)
        if self.weights.ndim != 3:
            raise ValueError("weights must have shape (columns, slices, rows)")
        if self.edge_cost.ndim != 1 or len(self.edge_cost) % 2 != 1:
            raise ValueError("edge_cost must be a 1-D table of odd length 2K + 1")

    @property
    def edge_interval(self) -> int:
        return (len(self.edge_cost) - 1) // 2

    @property
    def dims(self) -> VolumeDims:
        c, s, r = self.weights.shape
        return VolumeDims(r, c, s, self.edge_interval)

    def cost(self, d: int) -> int:
        return self.edge_cost[d + self.edge_interval].item()


@dataclass
class NetSurface:
    """Row index per column, shape ``(C, S)``."""

    height: np.ndarray

    def is_feasible(self, edge_interval: int) -> bool:
        h = self.height.astype(np.int64)
        ok = True
        if h.shape[0] > 1:
            ok &= bool(np.all(np.abs(np.diff(h, axis=0)) <= edge_interval))
        if h.shape[1] > 1:
            ok &= bool(np.all(np.abs(np.diff(h, axis=1)) <= edge_interval))
        return ok


@dataclass
class SurfaceInstance:
    """Flow instance for a surface problem; ``objective = cut + offset``."""

    store: CapacityStore
    weights: SurfaceWeights
    offset: int
    big_m: int
    infinity: int


def check_convex(edge_cost) -> None:
    g = np.asarray(edge_cost, dtype=np.int64)
    if len(g) >= 3:
        second = g[2:] - 2 * g[1:-1] + g[:-2]
        if np.any(second < 0):
            m = int(np.flatnonzero(second < 0)[0]) + 1 - (len(g) - 1) // 2
            raise NonConvexPriorError(f"edge cost is not convex at offset {m}")


def _scaled(values, scale) -> np.ndarray:
    arr = np.asarray(values)
    if np.issubdtype(arr.dtype, np.floating):
        arr = np.rint(arr * scale)
    elif scale != 1:
        arr = arr * scale
    return arr.astype(np.int64)


def objective(weights: SurfaceWeights, surface: NetSurface) -> int | None:
    """Direct evaluation of the surface objective; None if infeasible."""
    w = weights.weights
    k = weights.edge_interval
    h = surface.height
    cols, slices = h.shape
    total = 0
    for c in range(cols):
        for s in range(slices):
            total += w[c, s, h[c, s]].item()
            for dc, ds in ((1, 0), (0, 1)):
                c2, s2 = c + dc, s + ds
                if c2 < cols and s2 < slices:
                    d = int(h[c2, s2]) - int(h[c, s])
                    if abs(d) > k:
                        return None
                    total += weights.cost(d)
    return total


def exhaustive_minimum(weights: SurfaceWeights) -> tuple[int, NetSurface]:
    """Minimum objective over every feasible surface (small instances only)."""
    cols, slices, rows = weights.weights.shape
    best = None
    best_h = None
    for combo in itertools.product(range(rows), repeat=cols * slices):
        surface = NetSurface(np.array(combo, dtype=np.int64).reshape(cols, slices))
        value = objective(weights, surface)
        if value is not None and (best is None or value < best):
            best, best_h = value, surface
    return best, best_h


def build_st_graph(weights: SurfaceWeights, dims: VolumeDims | None = None,
                   scale: int | float = 1) -> SurfaceInstance:
    """Structured flow instance whose minimum cut encodes the optimal surface."""
    if dims is None:
        dims = weights.dims
    if weights.weights.shape != (dims.columns, dims.slices, dims.rows):
        raise ValueError(
            f"weights shape {weights.weights.shape} does not match dims "
            f"{dims.rows}x{dims.columns}x{dims.slices}"
        )
    if weights.edge_interval != dims.edge_interval:
        raise ValueError("edge cost table length does not match the edge interval")
    w = _scaled(weights.weights, scale)
    g = _scaled(weights.edge_cost, scale)
    check_convex(g)
    scaled = SurfaceWeights(w, g)

    rows, cols, slices, k = dims.rows, dims.columns, dims.slices, dims.edge_interval
    # unary first differences along each column
    unary = w.astype(object).copy()
    unary[:, :, 1:] = w[:, :, 1:] - w[:, :, :-1]
    constant = 0

    pairs = []
    for c in range(cols):
        for s in range(slices):
            if c + 1 < cols:
                pairs.append(((c, s), (c + 1, s), RIGHT, LEFT))
            if s + 1 < slices:
                pairs.append(((c, s), (c, s + 1), BACK, FRONT))

    g_list = [int(x) for x in g]
    slope = g_list[1] - g_list[0] if k > 0 else 0
    hinges = {m: g_list[m + 1 + k] - 2 * g_list[m + k] + g_list[m - 1 + k]
              for m in range(-k + 1, k)}
    arcs = []  # (c, s, r, direction, delta, capacity) with capacity None = infinite
    for p, q, to_q, to_p in pairs:
        constant += g_list[0] + slope * k
        if slope:
            unary[q[0], q[1], 1:] += slope
            unary[p[0], p[1], 1:] -= slope
        for m, a in hinges.items():
            if not a:
                continue
            # a * max(0, h_q - h_p - m): cut arc (q, i) -> (p, i - m)
            for i in range(m + 1, rows):
                j = i - m
                if i < 0:
                    constant += a
                    if j < rows:
                        unary[p[0], p[1], j] -= a
                elif j >= rows:
                    unary[q[0], q[1], i] += a
                else:
                    arcs.append((q[0], q[1], i, to_p, -m, a))
        for r in range(k, rows):
            arcs.append((p[0], p[1], r, to_q, -k, None))
            arcs.append((q[0], q[1], r, to_p, -k, None))

    finite_lateral = sum(a[5] for a in arcs if a[5] is not None)
    big_m = 1 + int(sum(abs(int(x)) for x in unary.ravel())) + finite_lateral
    unary[:, :, 0] -= big_m
    constant += big_m * cols * slices

    flat_unary = unary.reshape(-1)
    negative_total = sum(-int(x) for x in flat_unary if x < 0)
    infinity = 1 + negative_total
    if negative_total > CAPACITY_MAX or 2 * infinity > CAPACITY_MAX:
        raise CapacityOverflowError(
            f"surface instance needs capacities up to {2 * infinity}, "
            "beyond the 4-byte range; reduce weights or scale"
        )
    store = CapacityStore(dims)
    blocks = store.blocks()
    for v, x in enumerate(flat_unary):
        x = int(x)
        if x < 0:
            blocks[v, dims.source_slot] = -x
        elif x > 0:
            blocks[v, dims.sink_slot] = x
    for c in range(cols):
        for s in range(slices):
            for r in range(1, rows):
                blocks[vertex_index(c, s, r, dims), DOWN] = infinity
    for c, s, r, direction, delta, cap in arcs:
        slot = dims.lateral_slot(direction, delta)
        v = vertex_index(c, s, r, dims)
        blocks[v, slot] += infinity if cap is None else cap
    store.validate()
    offset = constant - negative_total
    return SurfaceInstance(store, scaled, offset, big_m, infinity)


def extract_surface(cut: CutResult, dims: VolumeDims) -> NetSurface:
    """Highest source-side row in every column."""
    side = np.asarray(cut.in_source, dtype=bool).reshape(dims.columns, dims.slices, dims.rows)
    if not side[:, :, 0].all():
        c, s = (int(x) for x in np.argwhere(~side[:, :, 0])[0])
        raise EmptyColumnError(f"column (c={c}, s={s}) has no source-side vertex")
    top = dims.rows - 1 - np.argmax(side[:, :, ::-1], axis=2)
    return NetSurface(top.astype(np.int64))
