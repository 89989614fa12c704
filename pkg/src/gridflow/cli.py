"""Command-line interface: solve, gen, verify, bench.

Exit codes: 0 success, 1 usage error, 2 verification failure, 3 input/output
error (missing or malformed file, capacity overflow).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from .errors import CapacityOverflowError, FormatError, GridFlowError
from .generate import random_capacities, random_weights
from .io import load_instance, pogf_bytes, pogw_bytes, weights_text
from .oracle import oracle_maxflow
from .report import RunReport, bench_csv, memory_footprint, peak_rss_bytes, reports_csv
from .solve import BACKENDS, default_gr_factor, result_cut, solve
from .structured_graph import VolumeDims
from .surface import build_st_graph, extract_surface, objective
from .verify import check_result, verify_instance

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VERIFY = 2
EXIT_IO = 3


def _tiles(text: str) -> tuple[int, int]:
    try:
        c, s = (int(x) for x in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"tiles must look like CxS, got {text!r}") from None
    if c < 1 or s < 1:
        raise argparse.ArgumentTypeError("tile counts must be positive")
    return c, s


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_solver_flags(p: argparse.ArgumentParser):
    p.add_argument("--segments", type=int, default=1, help="pr-parallel column segments")
    p.add_argument("--tiles", type=_tiles, default=(1, 1), help="bk-parallel tiling CxS")
    p.add_argument("--gr-factor", type=float, default=None,
                   help="global relabel factor (default 2, or 1 from 20M vertices)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1,
                   help="fixed-point scale applied to surface weights")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gridflow", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance and print a report")
    p.add_argument("path")
    p.add_argument("--backend", choices=BACKENDS, default="pr-serial")
    _add_solver_flags(p)
    p.add_argument("--report", choices=("csv", "json"), default="csv")
    p.add_argument("--verify-with-oracle", action="store_true")
    p.add_argument("--output", help="also write the report to this file")

    p = sub.add_parser("gen", help="generate a deterministic instance")
    p.add_argument("--dims", required=True, help="RxCxS")
    p.add_argument("--edge-interval", type=int, default=1)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--kind", choices=("pogf", "pogw", "weights-text"), default="pogf")
    p.add_argument("--lo", type=int, default=None)
    p.add_argument("--hi", type=int, default=None)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--cost", choices=("linear", "random"), default="linear")
    p.add_argument("--out", required=True)

    p = sub.add_parser("verify", help="cross-check backends and invariants")
    p.add_argument("path")
    p.add_argument("--backends", default="pr-serial,pr-parallel,bk-serial,bk-parallel",
                   help="comma-separated backends")
    p.add_argument("--segment-list", type=_int_list, default=[1, 2, 4, 8])
    p.add_argument("--tile-list", default="1x1,2x1,2x2")
    p.add_argument("--verify-with-oracle", action="store_true",
                   help="force the oracle even on large instances")
    p.add_argument("--scale", type=float, default=1)

    p = sub.add_parser("bench", help="time a backend over segment counts")
    p.add_argument("path", nargs="?", help="instance file; omit to generate from --dims")
    p.add_argument("--dims", default="16x64x64")
    p.add_argument("--edge-interval", type=int, default=2)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--backend", choices=("pr-parallel", "bk-parallel"), default="pr-parallel")
    p.add_argument("--segment-list", type=_int_list, default=[1, 2, 4, 8])
    p.add_argument("--repetitions", type=int, default=1)
    p.add_argument("--gr-factor", type=float, default=None)
    p.add_argument("--out", help="CSV destination (stdout if omitted)")
    return parser


def _structured(kind, payload, scale):
    """(store, surface instance or None) from a loaded file."""
    if kind in ("pogw", "weights-text"):
        surface = build_st_graph(payload, scale=scale)
        return surface.store, surface
    return payload, None


def cmd_solve(args) -> int:
    kind, payload = load_instance(args.path)
    started = time.perf_counter()
    if kind == "dimacs":
        if args.backend != "oracle":
            print("DIMACS input is only supported with --backend oracle", file=sys.stderr)
            return EXIT_USAGE
        result = oracle_maxflow(payload)
        elapsed = time.perf_counter() - started
        cut = sum(c for u, v, c in payload.edges
                  if u in result.source_side and v not in result.source_side)
        report = RunReport(
            instance=Path(args.path).name, dims=f"{payload.num_nodes}", edge_interval=0,
            backend="oracle", partition="1", gr_factor=0.0, wall_seconds=round(elapsed, 6),
            maxflow=result.value, cut_capacity=cut, peak_rss_bytes=peak_rss_bytes(),
            edge_storage_bytes=0,
        )
        return _emit(args, report)

    store, surface = _structured(kind, payload, args.scale)
    dims = store.dims
    gr = args.gr_factor if args.gr_factor is not None else default_gr_factor(dims.n)
    result = solve(store, args.backend, segments=args.segments, tiles=args.tiles,
                   gr_factor=gr, seed=args.seed)
    elapsed = time.perf_counter() - started
    cut = result_cut(result)
    partition = {"pr-parallel": str(args.segments),
                 "bk-parallel": f"{args.tiles[0]}x{args.tiles[1]}"}.get(args.backend, "1")
    surface_value = None
    if surface is not None:
        surface_value = objective(surface.weights, extract_surface(cut, dims))
    report = RunReport(
        instance=Path(args.path).name,
        dims=f"{dims.rows}x{dims.columns}x{dims.slices}",
        edge_interval=dims.edge_interval,
        backend=args.backend,
        partition=partition,
        gr_factor=gr,
        wall_seconds=round(elapsed, 6),
        maxflow=result.value,
        cut_capacity=cut.cut_capacity,
        peak_rss_bytes=peak_rss_bytes(),
        edge_storage_bytes=store.nbytes,
        surface_objective=surface_value,
    )
    status = _emit(args, report)
    problems = check_result(result)
    if args.verify_with_oracle and args.backend != "oracle":
        reference = solve(store, "oracle")
        if reference.value != result.value:
            problems.append(f"oracle value {reference.value} != {result.value}")
    if problems:
        for p in problems:
            print(f"verification failed: {p}", file=sys.stderr)
        return EXIT_VERIFY
    return status


def _emit(args, report: RunReport) -> int:
    text = report.to_json() + "\n" if args.report == "json" else reports_csv([report])
    sys.stdout.write(text)
    if args.output:
        Path(args.output).write_text(text)
    if not report.consistent:
        print(f"verification failed: flow {report.maxflow} != cut {report.cut_capacity}",
              file=sys.stderr)
        return EXIT_VERIFY
    return EXIT_OK


def cmd_gen(args) -> int:
    dims = VolumeDims.parse(args.dims, args.edge_interval)
    if args.kind == "pogf":
        lo = 0 if args.lo is None else args.lo
        hi = 20 if args.hi is None else args.hi
        data = pogf_bytes(random_capacities(dims, args.seed, lo, hi, args.density))
    else:
        lo = 0 if args.lo is None else args.lo
        hi = 9 if args.hi is None else args.hi
        weights = random_weights(dims, args.seed, lo, hi, args.cost)
        data = pogw_bytes(weights) if args.kind == "pogw" else weights_text(weights).encode()
    Path(args.out).write_bytes(data)
    return EXIT_OK


def cmd_verify(args) -> int:
    kind, payload = load_instance(args.path)
    if kind == "dimacs":
        print("verify needs a structured instance (POGF, POGW or weights text)",
              file=sys.stderr)
        return EXIT_USAGE
    backends = [b for b in args.backends.split(",") if b]
    unknown = set(backends) - set(BACKENDS)
    if unknown:
        print(f"unknown backends: {', '.join(sorted(unknown))}", file=sys.stderr)
        return EXIT_USAGE
    tiles = [_tiles(t) for t in args.tile_list.split(",") if t]
    dims = payload.dims
    tiles = [t for t in tiles if t[0] <= dims.columns and t[1] <= dims.slices]
    outcome = verify_instance(payload, backends, args.segment_list, tiles,
                              use_oracle=True if args.verify_with_oracle else None,
                              scale=args.scale)
    for label, value in outcome.values.items():
        print(f"{label}\t{value}")
    if outcome.failures:
        for f in outcome.failures:
            print(f"FAIL {f}", file=sys.stderr)
        return EXIT_VERIFY
    print("all checks passed")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.path:
        kind, payload = load_instance(args.path)
        if kind == "dimacs":
            print("bench needs a structured instance", file=sys.stderr)
            return EXIT_USAGE
        store, _ = _structured(kind, payload, 1)
        name = Path(args.path).name
    else:
        dims = VolumeDims.parse(args.dims, args.edge_interval)
        store = random_capacities(dims, args.seed)
        name = f"gen-seed{args.seed}"
    dims = store.dims
    mem = memory_footprint(dims, store.cache.nbytes)
    rows = []
    for seg in args.segment_list:
        if args.backend == "pr-parallel" and seg > dims.columns:
            continue
        for rep in range(args.repetitions):
            started = time.perf_counter()
            if args.backend == "pr-parallel":
                result = solve(store, "pr-parallel", segments=seg, gr_factor=args.gr_factor)
            else:
                result = solve(store, "bk-parallel", tiles=seg)
            elapsed = time.perf_counter() - started
            rows.append({
                "instance": name,
                "dims": f"{dims.rows}x{dims.columns}x{dims.slices}",
                "edge_interval": dims.edge_interval,
                "backend": args.backend,
                "segments": seg,
                "repetition": rep,
                "wall_seconds": round(elapsed, 6),
                "maxflow": result.value,
                "structured_edge_bytes": mem.structured_edge_bytes,
                "offset_cache_bytes": mem.offset_cache_bytes,
                "structured_total_bytes": mem.structured_total_bytes,
                "explicit_baseline_bytes": mem.explicit_baseline_bytes,
                "memory_ratio": round(mem.ratio, 3),
            })
    text = bench_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    values = {r["maxflow"] for r in rows}
    return EXIT_OK if len(values) <= 1 else EXIT_VERIFY


COMMANDS = {"solve": cmd_solve, "gen": cmd_gen, "verify": cmd_verify, "bench": cmd_bench}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (OSError, FormatError, CapacityOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (GridFlowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
