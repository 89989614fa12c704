"""Run reports and benchmark rows."""

from __future__ import annotations

import csv
import io
import json
import resource
import sys
from dataclasses import asdict, dataclass, fields

from .structured_graph import VolumeDims

EXPLICIT_BYTES_PER_HALF_EDGE = 32
EXPLICIT_BYTES_PER_NODE = 128


@dataclass
class RunReport:
    instance: str
    dims: str
    edge_interval: int
    backend: str
    partition: str
    gr_factor: float
    wall_seconds: float
    maxflow: int
    cut_capacity: int
    peak_rss_bytes: int
    edge_storage_bytes: int
    surface_objective: int | None = None

    @classmethod
    def header(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def row(self) -> list:
        return [getattr(self, name) for name in self.header()]

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=False)

    @property
    def consistent(self) -> bool:
        return self.maxflow == self.cut_capacity


def peak_rss_bytes() -> int:
    """Peak resident set size of this process (Linux reports KiB)."""
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    return peak if sys.platform == "darwin" else peak * 1024


def reports_csv(reports: list[RunReport]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RunReport.header())
    for r in reports:
        writer.writerow(["" if x is None else x for x in r.row()])
    return out.getvalue()


@dataclass
class MemoryFootprint:
    structured_edge_bytes: int
    offset_cache_bytes: int
    offset_cache_entries: int
    explicit_baseline_bytes: int

    @property
    def structured_total_bytes(self) -> int:
        return self.structured_edge_bytes + self.offset_cache_bytes

    @property
    def ratio(self) -> float:
        return self.explicit_baseline_bytes / self.structured_total_bytes


def memory_footprint(dims: VolumeDims, cache_bytes: int | None = None) -> MemoryFootprint:
    """Structured layout versus an explicit 32 B/half-edge + 128 B/node graph.

    The explicit figure is computed, never allocated.
    """
    entries = dims.column_size * dims.edges_per_node
    return MemoryFootprint(
        structured_edge_bytes=dims.half_edges * 4,
        offset_cache_bytes=entries * 8 if cache_bytes is None else cache_bytes,
        offset_cache_entries=entries,
        explicit_baseline_bytes=(dims.half_edges * EXPLICIT_BYTES_PER_HALF_EDGE
                                 + dims.n * EXPLICIT_BYTES_PER_NODE),
    )


BENCH_HEADER = [
    "instance", "dims", "edge_interval", "backend", "segments", "repetition",
    "wall_seconds", "maxflow", "structured_edge_bytes", "offset_cache_bytes",
    "structured_total_bytes", "explicit_baseline_bytes", "memory_ratio",
]


def bench_csv(rows: list[dict]) -> str:
    out = io.StringIO()
    writer = csv.DictWriter(out, fieldnames=BENCH_HEADER, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return out.getvalue()
