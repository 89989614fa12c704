from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from gridflow.structured_graph import CapacityStore, VolumeDims, slot_exists_mask

FIXTURES = Path(__file__).parent / "fixtures"


def random_store(rng: np.random.Generator, max_rows=6, max_columns=4, max_slices=4,
                 max_k=2, max_cap=20, density=0.6, min_columns=1) -> CapacityStore:
    dims = VolumeDims(
        int(rng.integers(1, max_rows + 1)),
        int(rng.integers(min_columns, max_columns + 1)),
        int(rng.integers(1, max_slices + 1)),
        int(rng.integers(0, max_k + 1)),
    )
    caps = rng.integers(0, max_cap + 1, size=dims.half_edges)
    caps *= rng.random(dims.half_edges) < density
    caps *= slot_exists_mask(dims).ravel()
    return CapacityStore(dims, caps.astype("<u4"))


def store_from_arcs(dims: VolumeDims, source=(), sink=(), arcs=()) -> CapacityStore:
    """Build a store from ``(v, cap)`` terminal arcs and ``(v, slot, cap)`` grid arcs."""
    store = CapacityStore(dims)
    for v, cap in source:
        store.set(v, dims.source_slot, cap)
    for v, cap in sink:
        store.set(v, dims.sink_slot, cap)
    for v, slot, cap in arcs:
        store.set(v, slot, cap)
    return store


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, title: str, ok: bool, detail: str, status: str | None = None):
    """Print and remember one acceptance line; the caller decides how to fail."""
    line = f"criterion {number} [{status or ('PASS' if ok else 'FAIL')}] {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
