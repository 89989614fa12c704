"""Cross-backend verification of one instance."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cut import flow_violations
from .errors import EmptyColumnError, FlowNotMaximalError
from .preflow import FlowResult
from .solve import result_cut, solve
from .structured_graph import CapacityStore
from .surface import (
    SurfaceInstance,
    SurfaceWeights,
    build_st_graph,
    exhaustive_minimum,
    extract_surface,
    objective,
)

ORACLE_LIMIT = 10_000
EXHAUSTIVE_LIMIT = 200_000


@dataclass
class VerifyOutcome:
    values: dict[str, int] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def check_result(result: FlowResult) -> list[str]:
    """Flow validity and flow == cut for one solved instance."""
    name = result.backend
    problems = []
    if result.residual is not None:
        problems += [f"{name}: {p}" for p in
                     flow_violations(result.instance, result.residual, result.value)]
    try:
        cut = result_cut(result)
    except FlowNotMaximalError as exc:
        return problems + [f"{name}: {exc}"]
    if cut.cut_capacity != result.value:
        problems.append(f"{name}: cut capacity {cut.cut_capacity} != flow {result.value}")
    return problems


def check_surface(surface_instance: SurfaceInstance, result: FlowResult,
                  exhaustive: bool = True) -> list[str]:
    weights = surface_instance.weights
    dims = surface_instance.store.dims
    try:
        cut = result_cut(result)
        surface = extract_surface(cut, dims)
    except (FlowNotMaximalError, EmptyColumnError) as exc:
        return [f"surface: {exc}"]
    problems = []
    if not surface.is_feasible(dims.edge_interval):
        problems.append("surface: adjacent heights differ by more than K")
    value = objective(weights, surface)
    reduced = cut.cut_capacity + surface_instance.offset
    if value != reduced:
        problems.append(f"surface: objective {value} != cut + offset {reduced}")
    if exhaustive and dims.rows ** (dims.columns * dims.slices) <= EXHAUSTIVE_LIMIT:
        best, _ = exhaustive_minimum(weights)
        if value != best:
            problems.append(f"surface: objective {value} != exhaustive minimum {best}")
    return problems


def verify_instance(instance: CapacityStore | SurfaceWeights,
                    backends: list[str], segments: list[int] | None = None,
                    tiles: list[tuple[int, int]] | None = None,
                    use_oracle: bool | None = None, scale: int | float = 1,
                    **options) -> VerifyOutcome:
    """Run every requested backend configuration and compare all invariants."""
    outcome = VerifyOutcome()
    surface_instance = None
    if isinstance(instance, SurfaceWeights):
        surface_instance = build_st_graph(instance, scale=scale)
        instance = surface_instance.store
    if use_oracle is None:
        use_oracle = instance.dims.n <= ORACLE_LIMIT
    runs = []
    for backend in backends:
        if backend == "pr-parallel":
            for seg in segments or [1]:
                if seg <= instance.dims.columns:
                    runs.append((f"pr-parallel/{seg}", dict(backend=backend, segments=seg)))
        elif backend == "bk-parallel":
            for tile in tiles or [(1, 1)]:
                runs.append((f"bk-parallel/{tile[0]}x{tile[1]}",
                             dict(backend=backend, tiles=tile)))
        elif backend != "oracle":
            runs.append((backend, dict(backend=backend)))
    if use_oracle and "oracle" not in [r[0] for r in runs]:
        runs.append(("oracle", dict(backend="oracle")))

    for label, kwargs in runs:
        extra = options if kwargs["backend"] == "pr-parallel" else {}
        result = solve(instance, **kwargs, **extra)
        outcome.values[label] = result.value
        outcome.failures += [f"{label}: {p}" for p in check_result(result)]
        if surface_instance is not None:
            outcome.failures += [f"{label}: {p}" for p in
                                 check_surface(surface_instance, result,
                                               exhaustive=label == runs[0][0])]
    distinct = set(outcome.values.values())
    if len(distinct) > 1:
        detail = ", ".join(f"{k}={v}" for k, v in outcome.values.items())
        outcome.failures.append(f"value mismatch: {detail}")
    return outcome
