"""Column segmentation and shared-vertex classification."""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import TooManySegmentsError
from ..structured_graph import VolumeDims


@dataclass
class Partition:
    dims: VolumeDims
    column_ranges: list[tuple[int, int]]
    segment_of_column: list[int]
    lockable: bytearray

    @property
    def segment_count(self) -> int:
        return len(self.column_ranges)

    def vertex_range(self, segment: int) -> range:
        a, b = self.column_ranges[segment]
        sr = self.dims.column_size
        return range(a * sr, b * sr)

    def segment_of(self, v: int) -> int:
        return self.segment_of_column[v // self.dims.column_size]

    def boundaries(self) -> list[int]:
        """First column of every segment but the first."""
        return [a for a, _ in self.column_ranges[1:]]


def partition(dims: VolumeDims, segment_count: int) -> Partition:
    """Split columns into contiguous ranges, larger ones first.

    Lateral edges only reach the adjacent column, so the shared vertices are
    exactly the two column slabs on either side of every boundary.
    """
    if segment_count < 1:
        raise ValueError("segment_count must be >= 1")
    if segment_count > dims.columns:
        raise TooManySegmentsError(
            f"{segment_count} segments requested but the volume has {dims.columns} columns"
        )
    base, extra = divmod(dims.columns, segment_count)
    ranges, start = [], 0
    for i in range(segment_count):
        stop = start + base + (1 if i < extra else 0)
        ranges.append((start, stop))
        start = stop
    seg_of_col = [0] * dims.columns
    for i, (a, b) in enumerate(ranges):
        seg_of_col[a:b] = [i] * (b - a)
    sr = dims.column_size
    lockable = bytearray(dims.n)
    for b, _ in ranges[1:]:
        lockable[(b - 1) * sr:(b + 1) * sr] = b"\x01" * (2 * sr)
    return Partition(dims, ranges, seg_of_col, lockable)
