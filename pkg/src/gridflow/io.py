"""Instance files: POGF capacities, POGW surface weights, text weights, DIMACS.

POGF (little-endian)::

    offset  size        field
    0       4           magic b"POGF"
    4       4           u32 format version (1)
    8       16          u32 R, C, S, K
    24      4*n*(8K+8)  u32 capacities, vertex-major, slot-minor

POGW shares the 24-byte header (magic b"POGW") and is followed by ``n`` i32
vertex weights in vertex-index order and ``2K+1`` i32 edge costs for
offsets ``-K .. K``.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import CapacityOverflowError, FormatError
from .oracle import EdgeListGraph
from .structured_graph import CAPACITY_DTYPE, CapacityStore, VolumeDims, slot_exists_mask
from .surface import SurfaceWeights

FORMAT_VERSION = 1
HEADER = struct.Struct("<4sIIIII")
POGF_MAGIC = b"POGF"
POGW_MAGIC = b"POGW"


def _read_header(data: bytes, magic: bytes) -> VolumeDims:
    if len(data) < HEADER.size:
        raise FormatError(f"file too short for a {magic.decode()} header", len(data))
    found, version, rows, columns, slices, k = HEADER.unpack_from(data)
    if found != magic:
        raise FormatError(f"bad magic {found!r}, expected {magic!r}", 0)
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}", 4)
    try:
        return VolumeDims(rows, columns, slices, k)
    except ValueError as exc:
        raise FormatError(str(exc), 8) from None


def _header(magic: bytes, dims: VolumeDims) -> bytes:
    return HEADER.pack(magic, FORMAT_VERSION, dims.rows, dims.columns, dims.slices,
                       dims.edge_interval)


def pogf_bytes(store: CapacityStore) -> bytes:
    return _header(POGF_MAGIC, store.dims) + store.residual.astype("<u4").tobytes()


def parse_pogf(data: bytes) -> CapacityStore:
    dims = _read_header(data, POGF_MAGIC)
    expected = HEADER.size + 4 * dims.half_edges
    if len(data) != expected:
        raise FormatError(
            f"expected {expected} bytes for {dims.rows}x{dims.columns}x{dims.slices} "
            f"K={dims.edge_interval}, got {len(data)}",
            min(len(data), expected),
        )
    caps = np.frombuffer(data, dtype=CAPACITY_DTYPE, offset=HEADER.size).copy()
    bad = np.flatnonzero((caps != 0) & ~slot_exists_mask(dims).ravel())
    if bad.size:
        e = int(bad[0])
        raise FormatError(
            f"non-zero capacity on non-existent edge (vertex {e // dims.edges_per_node}, "
            f"slot {e % dims.edges_per_node})",
            HEADER.size + 4 * e,
        )
    store = CapacityStore(dims, caps)
    store.validate()
    return store


def pogw_bytes(weights: SurfaceWeights) -> bytes:
    w = np.asarray(weights.weights, dtype=np.int64).ravel()
    g = np.asarray(weights.edge_cost, dtype=np.int64)
    for arr in (w, g):
        if arr.size and (arr.min() < -(2**31) or arr.max() >= 2**31):
            raise CapacityOverflowError("POGW values must fit in signed 32 bits")
    return (_header(POGW_MAGIC, weights.dims) + w.astype("<i4").tobytes()
            + g.astype("<i4").tobytes())


def parse_pogw(data: bytes) -> SurfaceWeights:
    dims = _read_header(data, POGW_MAGIC)
    width = dims.interval_width
    expected = HEADER.size + 4 * (dims.n + width)
    if len(data) != expected:
        raise FormatError(f"expected {expected} bytes, got {len(data)}",
                          min(len(data), expected))
    w = np.frombuffer(data, dtype="<i4", count=dims.n, offset=HEADER.size).astype(np.int64)
    g = np.frombuffer(data, dtype="<i4", count=width,
                      offset=HEADER.size + 4 * dims.n).astype(np.int64)
    return SurfaceWeights(w.reshape(dims.columns, dims.slices, dims.rows), g)


# --------------------------------------------------------------- text weights

TEXT_MAGIC = "gridflow-weights 1"


def weights_text(weights: SurfaceWeights) -> str:
    """Hand-editable form::

        gridflow-weights 1
        dims 3x2x1 k=1
        cost 1 0 1
        w 0 0: 5 1 3
        w 1 0: 4 4 0
    """
    dims = weights.dims
    lines = [TEXT_MAGIC,
             f"dims {dims.rows}x{dims.columns}x{dims.slices} k={dims.edge_interval}",
             "cost " + " ".join(str(int(x)) for x in weights.edge_cost)]
    for c in range(dims.columns):
        for s in range(dims.slices):
            row = " ".join(str(int(x)) for x in weights.weights[c, s])
            lines.append(f"w {c} {s}: {row}")
    return "\n".join(lines) + "\n"


def parse_weights_text(text: str) -> SurfaceWeights:
    dims = None
    cost = None
    weights = None
    seen = set()
    offset = 0
    saw_magic = False
    for raw in text.splitlines(keepends=True):
        line = raw.split("#", 1)[0].strip()
        at = offset
        offset += len(raw.encode())
        if not line:
            continue
        try:
            if not saw_magic:
                if line != TEXT_MAGIC:
                    raise FormatError(f"expected {TEXT_MAGIC!r} header", at)
                saw_magic = True
            elif line.startswith("dims "):
                shape, _, k = line[5:].partition(" k=")
                dims = VolumeDims.parse(shape.strip(), int(k))
                weights = np.zeros((dims.columns, dims.slices, dims.rows), dtype=np.int64)
            elif line.startswith("cost "):
                cost = np.array([int(x) for x in line[5:].split()], dtype=np.int64)
            elif line.startswith("w "):
                if weights is None:
                    raise FormatError("weight line before dims line", at)
                head, _, values = line[2:].partition(":")
                c, s = (int(x) for x in head.split())
                vals = [int(x) for x in values.split()]
                if len(vals) != dims.rows:
                    raise FormatError(f"expected {dims.rows} weights, got {len(vals)}", at)
                if not (0 <= c < dims.columns and 0 <= s < dims.slices):
                    raise FormatError(f"column ({c}, {s}) outside the volume", at)
                weights[c, s] = vals
                seen.add((c, s))
            else:
                raise FormatError(f"unrecognised line {line!r}", at)
        except ValueError as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed line {line!r}: {exc}", at) from None
    if dims is None or cost is None:
        raise FormatError("missing dims or cost line", offset)
    if len(cost) != dims.interval_width:
        raise FormatError(f"cost table needs {dims.interval_width} entries", offset)
    if len(seen) != dims.columns * dims.slices:
        raise FormatError("some columns have no weight line", offset)
    return SurfaceWeights(weights, cost)


# --------------------------------------------------------------------- DIMACS

def parse_dimacs(text: str) -> EdgeListGraph:
    """DIMACS max-flow: ``p max n m``, ``n id s|t``, ``a u v c`` (1-based ids)."""
    num_nodes = None
    source = sink = None
    edges = []
    offset = 0
    for raw in text.splitlines(keepends=True):
        at = offset
        offset += len(raw.encode())
        parts = raw.split()
        if not parts or parts[0] == "c":
            continue
        try:
            tag = parts[0]
            if tag == "p":
                if len(parts) != 4 or parts[1] != "max":
                    raise FormatError("problem line must be 'p max <nodes> <arcs>'", at)
                num_nodes = int(parts[2])
            elif tag == "n":
                if num_nodes is None:
                    raise FormatError("node line before problem line", at)
                node = int(parts[1]) - 1
                if not 0 <= node < num_nodes:
                    raise FormatError(f"node id {node + 1} out of range", at)
                if parts[2] == "s":
                    source = node
                elif parts[2] == "t":
                    sink = node
                else:
                    raise FormatError(f"node designator must be s or t, got {parts[2]!r}", at)
            elif tag == "a":
                if num_nodes is None:
                    raise FormatError("arc line before problem line", at)
                u, v, c = int(parts[1]) - 1, int(parts[2]) - 1, int(parts[3])
                if not (0 <= u < num_nodes and 0 <= v < num_nodes):
                    raise FormatError("arc endpoint out of range", at)
                if c < 0:
                    raise FormatError("negative arc capacity", at)
                edges.append((u, v, c))
            else:
                raise FormatError(f"unknown line type {tag!r}", at)
        except (ValueError, IndexError) as exc:
            if isinstance(exc, FormatError):
                raise
            raise FormatError(f"malformed line {raw.strip()!r}", at) from None
    if num_nodes is None or source is None or sink is None:
        raise FormatError("missing problem line or terminal designation", offset)
    return EdgeListGraph(num_nodes, source, sink, edges)


def dimacs_text(graph: EdgeListGraph) -> str:
    lines = [f"p max {graph.num_nodes} {len(graph.edges)}",
             f"n {graph.source + 1} s", f"n {graph.sink + 1} t"]
    lines += [f"a {u + 1} {v + 1} {c}" for u, v, c in graph.edges]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------- dispatching

def detect_format(path: str | Path) -> str:
    path = Path(path)
    with path.open("rb") as fh:
        head = fh.read(32)
    if head.startswith(POGF_MAGIC):
        return "pogf"
    if head.startswith(POGW_MAGIC):
        return "pogw"
    if head.startswith(TEXT_MAGIC.encode()):
        return "weights-text"
    return "dimacs"


def load_instance(path: str | Path):
    """Return ``(kind, payload)`` with kind in pogf/pogw/weights-text/dimacs."""
    path = Path(path)
    kind = detect_format(path)
    data = path.read_bytes()
    if kind == "pogf":
        return kind, parse_pogf(data)
    if kind == "pogw":
        return kind, parse_pogw(data)
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise FormatError("text instance is not ASCII", exc.start) from None
    if kind == "weights-text":
        return kind, parse_weights_text(text)
    return kind, parse_dimacs(text)


def write_pogf(path: str | Path, store: CapacityStore):
    Path(path).write_bytes(pogf_bytes(store))


def write_pogw(path: str | Path, weights: SurfaceWeights):
    Path(path).write_bytes(pogw_bytes(weights))


__all__ = [
    "FORMAT_VERSION",
    "detect_format",
    "dimacs_text",
    "load_instance",
    "parse_dimacs",
    "parse_pogf",
    "parse_pogw",
    "parse_weights_text",
    "pogf_bytes",
    "pogw_bytes",
    "weights_text",
    "write_pogf",
    "write_pogw",
]
