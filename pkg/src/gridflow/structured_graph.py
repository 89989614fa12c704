"""Proper-order multi-column graph topology with implicit edge addressing.

Vertices of an ``R x C x S`` volume are numbered ``(c * S + s) * R + r`` so
that a range of columns ``c`` occupies one contiguous index range.  Every
vertex owns a fixed block of ``8K + 8`` half-edge slots:

====================  =========================================
slot                  meaning
====================  =========================================
0                     up (row + 1, same column)
1                     down (row - 1, same column)
2 .. 8K+5             lateral interval slots, grouped by neighbour
                      column (left, right, front, back) and then by
                      vertical offset ``delta`` in ``-K .. +K``
8K+6                  arc from the source into this vertex
8K+7                  arc from this vertex into the sink
====================  =========================================

"left/right" step along the column axis ``c`` and "front/back" along the
slice axis ``s``.  The residual capacity of half-edge ``(v, slot)`` lives at
``v * edges_per_node + slot`` in one flat ``uint32`` array; a half-edge's mate
is found through a small offset cache keyed by ``(slice, row, slot)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import (
    CapacityOverflowError,
    OutOfGridError,
    TerminalArcHasNoMateError,
    TerminalHasNoBlockError,
)

SOURCE = -1
SINK = -2

UP = 0
DOWN = 1
LATERAL_BASE = 2

LEFT, RIGHT, FRONT, BACK = range(4)
DIRECTION_NAMES = ("left", "right", "front", "back")
OPPOSITE = (RIGHT, LEFT, BACK, FRONT)
# (column step, slice step) per lateral direction
DIRECTION_STEP = ((-1, 0), (1, 0), (0, -1), (0, 1))

CAPACITY_MAX = 2**32 - 1
CAPACITY_DTYPE = np.dtype("<u4")

# Sentinel stored in the offset cache for slots that leave the grid.
OUT_OF_BOUNDS = np.iinfo(np.int64).min


@dataclass(frozen=True)
class VolumeDims:
    rows: int
    columns: int
    slices: int
    edge_interval: int

    def __post_init__(self):
        for name in ("rows", "columns", "slices"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
        if int(self.edge_interval) != self.edge_interval or self.edge_interval < 0:
            raise ValueError(f"edge_interval must be >= 0, got {self.edge_interval!r}")

    @classmethod
    def parse(cls, text: str, edge_interval: int) -> "VolumeDims":
        """Parse an ``RxCxS`` string."""
        try:
            rows, columns, slices = (int(part) for part in text.lower().split("x"))
        except ValueError:
            raise ValueError(f"dims must look like RxCxS, got {text!r}") from None
        return cls(rows, columns, slices, edge_interval)

    @property
    def n(self) -> int:
        return self.rows * self.columns * self.slices

    @property
    def column_size(self) -> int:
        """Vertices in one ``c`` slab (all slices and rows of one column index)."""
        return self.rows * self.slices

    @property
    def interval_width(self) -> int:
        return 2 * self.edge_interval + 1

    @property
    def edges_per_node(self) -> int:
        return 8 * self.edge_interval + 8

    @property
    def lateral_end(self) -> int:
        """One past the last lateral slot; slots below this have mates."""
        return LATERAL_BASE + 4 * self.interval_width

    @property
    def source_slot(self) -> int:
        return self.lateral_end

    @property
    def sink_slot(self) -> int:
        return self.lateral_end + 1

    @property
    def half_edges(self) -> int:
        return self.n * self.edges_per_node

    def lateral_slot(self, direction: int, delta: int) -> int:
        k = self.edge_interval
        if not -k <= delta <= k:
            raise ValueError(f"delta {delta} outside edge interval [-{k}, {k}]")
        return LATERAL_BASE + direction * self.interval_width + delta + k

    def slot_kind(self, slot: int) -> tuple[str, int | None, int]:
        """Decode a slot into ``(kind, direction, row_delta)``.

        ``kind`` is one of ``"up"``, ``"down"``, ``"lateral"``, ``"source"``,
        ``"sink"``.
        """
        if slot == UP:
            return "up", None, 1
        if slot == DOWN:
            return "down", None, -1
        if LATERAL_BASE <= slot < self.lateral_end:
            direction, offset = divmod(slot - LATERAL_BASE, self.interval_width)
            return "lateral", direction, offset - self.edge_interval
        if slot == self.source_slot:
            return "source", None, 0
        if slot == self.sink_slot:
            return "sink", None, 0
        raise ValueError(f"slot {slot} outside [0, {self.edges_per_node})")

    def coords(self, v: int) -> tuple[int, int, int]:
        """Inverse of :func:`vertex_index`: returns ``(c, s, r)``."""
        if not 0 <= v < self.n:
            raise OutOfGridError(f"vertex {v} outside [0, {self.n})")
        cs, r = divmod(v, self.rows)
        c, s = divmod(cs, self.slices)
        return c, s, r

    def column_of(self, v: int) -> int:
        return v // self.column_size


def vertex_index(c: int, s: int, r: int, dims: VolumeDims) -> int:
    if not (0 <= c < dims.columns and 0 <= s < dims.slices and 0 <= r < dims.rows):
        raise OutOfGridError(
            f"(c={c}, s={s}, r={r}) outside grid "
            f"{dims.rows}x{dims.columns}x{dims.slices}"
        )
    return (c * dims.slices + s) * dims.rows + r


def edge_base(v: int, dims: VolumeDims) -> int:
    if v in (SOURCE, SINK):
        raise TerminalHasNoBlockError("terminal vertices have no edge block")
    if not 0 <= v < dims.n:
        raise OutOfGridError(f"vertex {v} outside [0, {dims.n})")
    return v * dims.edges_per_node


def _slot_target(dims: VolumeDims, slot: int) -> tuple[int, int, int, int]:
    """(column step, slice step, row step, mate slot) for a non-terminal slot."""
    kind, direction, delta = dims.slot_kind(slot)
    if kind == "up":
        return 0, 0, 1, DOWN
    if kind == "down":
        return 0, 0, -1, UP
    if kind != "lateral":
        raise TerminalArcHasNoMateError(f"slot {slot} is a terminal arc")
    dc, ds = DIRECTION_STEP[direction]
    return dc, ds, delta, dims.lateral_slot(OPPOSITE[direction], -delta)


class OffsetCache:
    """Mate offsets for every ``(slice, row, slot)``.

    ``delta[s, r, slot]`` is the signed half-edge distance from ``(v, slot)``
    to its mate, i.e. ``(w - v) * edges_per_node + (mate_slot - slot)``, or
    :data:`OUT_OF_BOUNDS` when the target row or slice leaves the grid (and
    for the two terminal slots).  Steps across the column axis are never
    marked: at ``c = 0`` or ``c = C - 1`` they produce a half-edge index
    outside ``[0, n * edges_per_node)``, and such slots carry zero capacity.
    """

    def __init__(self, dims: VolumeDims, delta: np.ndarray):
        self.dims = dims
        self.delta = delta

    @property
    def entries(self) -> int:
        return self.delta.size

    @property
    def nbytes(self) -> int:
        return self.delta.nbytes

    @property
    def period(self) -> int:
        """Half-edge index period: ``e % period`` is the flat cache index of ``e``."""
        return self.dims.column_size * self.dims.edges_per_node

    def lookup(self, r: int, s: int, slot: int) -> int:
        return int(self.delta[s, r, slot])

    @cached_property
    def flat(self) -> list:
        """Flat Python list form; ``None`` marks out-of-bounds."""
        return [None if d == OUT_OF_BOUNDS else d for d in self.delta.ravel().tolist()]

    @cached_property
    def neighbor_table(self) -> list[tuple[tuple[int, int, int], ...]]:
        """Per ``s * R + r`` position: ``(slot, mate delta, vertex delta)`` triples.

        Only in-bounds grid slots are listed.  The vertex delta may still land
        outside ``[0, n)`` on the column boundary; callers reading a mate must
        check that (forward scans are safe because those slots hold zero).
        """
        epn = self.dims.edges_per_node
        table = []
        for s in range(self.dims.slices):
            for r in range(self.dims.rows):
                entries = []
                for slot in range(self.dims.lateral_end):
                    d = int(self.delta[s, r, slot])
                    if d == OUT_OF_BOUNDS:
                        continue
                    entries.append((slot, d, (slot + d) // epn))
                table.append(tuple(entries))
        return table

    @cached_property
    def bounded_tables(self) -> tuple[list, list, list]:
        """``neighbor_table`` variants with column-boundary slots removed.

        Index 0 serves ``c = 0`` (and drops right steps too when ``C = 1``),
        1 serves interior columns, 2 serves ``c = C - 1``.  Use
        :meth:`table_class` to pick one.
        """
        lat = self.dims.interval_width
        left = range(LATERAL_BASE + LEFT * lat, LATERAL_BASE + (LEFT + 1) * lat)
        right = range(LATERAL_BASE + RIGHT * lat, LATERAL_BASE + (RIGHT + 1) * lat)
        first_drop = set(left) | (set(right) if self.dims.columns == 1 else set())

        def without(drop):
            return [tuple(t for t in entries if t[0] not in drop)
                    for entries in self.neighbor_table]

        return without(first_drop), self.neighbor_table, without(set(right))

    def table_class(self, c: int) -> int:
        if c == 0:
            return 0
        return 2 if c == self.dims.columns - 1 else 1


def build_offset_cache(dims: VolumeDims) -> OffsetCache:
    epn = dims.edges_per_node
    rows, slices = dims.rows, dims.slices
    delta = np.full((slices, rows, epn), OUT_OF_BOUNDS, dtype=np.int64)
    r = np.arange(rows)[None, :]
    s = np.arange(slices)[:, None]
    for slot in range(dims.lateral_end):
        dc, ds, dr, mate_slot = _slot_target(dims, slot)
        ok = (r + dr >= 0) & (r + dr < rows) & (s + ds >= 0) & (s + ds < slices)
        step = (dc * slices + ds) * rows + dr
        delta[:, :, slot] = np.where(ok, step * epn + (mate_slot - slot), OUT_OF_BOUNDS)
    return OffsetCache(dims, delta)


def slot_exists_mask(dims: VolumeDims) -> np.ndarray:
    """Boolean ``(n, edges_per_node)`` mask of half-edges that exist structurally.

    Terminal slots always exist; grid slots exist iff the target vertex lies
    inside the volume.
    """
    epn = dims.edges_per_node
    c = np.arange(dims.columns)[:, None, None]
    s = np.arange(dims.slices)[None, :, None]
    r = np.arange(dims.rows)[None, None, :]
    mask = np.ones((dims.columns, dims.slices, dims.rows, epn), dtype=bool)
    for slot in range(dims.lateral_end):
        dc, ds, dr, _ = _slot_target(dims, slot)
        mask[..., slot] = (
            (c + dc >= 0) & (c + dc < dims.columns)
            & (s + ds >= 0) & (s + ds < dims.slices)
            & (r + dr >= 0) & (r + dr < dims.rows)
        )
    return mask.reshape(dims.n, epn)


class CapacityStore:
    """Flat per-slot capacities of a structured instance plus its offset cache.

    The same type serves as an immutable problem instance (original
    capacities) and as a solver's working residual graph; solvers call
    :meth:`copy` and mutate the copy.  For grid slots the value is the
    residual capacity of the half-edge; the source slot of ``v`` holds the
    residual of ``s -> v`` and the sink slot the residual of ``v -> t``.
    """

    def __init__(self, dims: VolumeDims, residual: np.ndarray | None = None,
                 cache: OffsetCache | None = None):
        self.dims = dims
        if residual is None:
            residual = np.zeros(dims.half_edges, dtype=CAPACITY_DTYPE)
        residual = np.asarray(residual)
        if residual.shape != (dims.half_edges,):
            raise ValueError(
                f"expected {dims.half_edges} capacities, got shape {residual.shape}"
            )
        if residual.dtype != CAPACITY_DTYPE:
            residual = _to_capacity_array(residual)
        self.residual = residual
        self.cache = cache if cache is not None else build_offset_cache(dims)

    def copy(self) -> "CapacityStore":
        return CapacityStore(self.dims, self.residual.copy(), self.cache)

    @property
    def nbytes(self) -> int:
        return self.residual.nbytes

    @property
    def view(self) -> memoryview:
        """Writable memoryview of the flat array (Python ints on indexing)."""
        return memoryview(self.residual)

    def blocks(self) -> np.ndarray:
        """``(n, edges_per_node)`` view of the flat array."""
        return self.residual.reshape(self.dims.n, self.dims.edges_per_node)

    def get(self, v: int, slot: int) -> int:
        return int(self.residual[edge_base(v, self.dims) + slot])

    def set(self, v: int, slot: int, capacity: int):
        if not 0 <= capacity <= CAPACITY_MAX:
            raise CapacityOverflowError(f"capacity {capacity} does not fit in 4 bytes")
        if slot < self.dims.lateral_end and mate(v, slot, self) is None:
            raise OutOfGridError(f"slot {slot} of vertex {v} leaves the grid")
        self.residual[edge_base(v, self.dims) + slot] = capacity

    def mate_half_edge(self, e: int) -> int | None:
        """Flat index of the mate of half-edge ``e``, or None if it has none."""
        d = self.cache.flat[e % self.cache.period]
        if d is None:
            return None
        m = e + d
        if not 0 <= m < self.dims.half_edges:
            return None
        return m

    def source_capacities(self) -> np.ndarray:
        return self.blocks()[:, self.dims.source_slot]

    def sink_capacities(self) -> np.ndarray:
        return self.blocks()[:, self.dims.sink_slot]

    def validate(self):
        """Check structural zeros and that no edge pair can overflow 4 bytes."""
        dims = self.dims
        blocks = self.blocks()
        mask = slot_exists_mask(dims)
        bad = np.argwhere(~mask & (blocks != 0))
        if bad.size:
            v, slot = (int(x) for x in bad[0])
            raise OutOfGridError(
                f"non-zero capacity on non-existent edge (vertex {v}, slot {slot})"
            )
        if _max_pair_sum(self, mask) > CAPACITY_MAX:
            raise CapacityOverflowError(
                "an edge and its mate together exceed the 4-byte capacity range"
            )
        total_source = int(self.source_capacities().sum(dtype=np.uint64))
        if total_source > CAPACITY_MAX:
            raise CapacityOverflowError(
                f"total source capacity {total_source} exceeds the 4-byte range"
            )


def _max_pair_sum(store: CapacityStore, mask: np.ndarray) -> int:
    dims = store.dims
    epn = dims.edges_per_node
    res = store.residual
    vertices = np.arange(dims.n, dtype=np.int64)
    best = 0
    for slot in range(dims.lateral_end):
        delta = np.tile(store.cache.delta[:, :, slot].ravel(), dims.columns)
        keep = mask[:, slot]
        e = vertices[keep] * epn + slot
        if e.size == 0:
            continue
        m = e + delta[keep]
        best = max(best, int((res[e].astype(np.uint64) + res[m]).max()))
    return best


def _to_capacity_array(values) -> np.ndarray:
    arr = np.asarray(values)
    if arr.size and (arr.min() < 0 or arr.max() > CAPACITY_MAX):
        raise CapacityOverflowError("capacities must lie in [0, 2**32 - 1]")
    return arr.astype(CAPACITY_DTYPE)


def mate(v: int, slot: int, store: CapacityStore) -> tuple[int, int] | None:
    """Neighbour vertex and reciprocal slot of ``(v, slot)``; None if out of bounds."""
    dims = store.dims
    if v in (SOURCE, SINK):
        raise TerminalHasNoBlockError("terminal vertices have no edge block")
    if slot >= dims.lateral_end:
        raise TerminalArcHasNoMateError(f"slot {slot} is a terminal arc")
    if not 0 <= slot:
        raise ValueError(f"invalid slot {slot}")
    e = edge_base(v, dims) + slot
    m = store.mate_half_edge(e)
    if m is None:
        return None
    return divmod(m, dims.edges_per_node)
