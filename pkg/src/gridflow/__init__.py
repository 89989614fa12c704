"""Maxflow/mincut on structured multi-column graphs."""

from .bk import bk_maxflow
from .cut import CutResult, flow_violations, min_cut
from .errors import (
    CapacityOverflowError,
    EmptyColumnError,
    FlowNotMaximalError,
    FormatError,
    GridFlowError,
    NonConvexPriorError,
    OutOfGridError,
    TerminalArcHasNoMateError,
    TerminalHasNoBlockError,
    TooManySegmentsError,
)
from .oracle import EdgeListGraph, oracle_maxflow, store_to_edge_list
from .parallel import pr_parallel_maxflow
from .parallel_bk import bk_parallel_maxflow
from .preflow import FlowResult, FlowState, push_relabel_maxflow
from .solve import BACKENDS, solve
from .structured_graph import (
    SINK,
    SOURCE,
    CapacityStore,
    VolumeDims,
    build_offset_cache,
    edge_base,
    mate,
    vertex_index,
)
from .surface import NetSurface, SurfaceWeights, build_st_graph, extract_surface

__all__ = [
    "BACKENDS",
    "CapacityOverflowError",
    "CapacityStore",
    "CutResult",
    "EdgeListGraph",
    "EmptyColumnError",
    "FlowNotMaximalError",
    "FlowResult",
    "FlowState",
    "FormatError",
    "GridFlowError",
    "NetSurface",
    "NonConvexPriorError",
    "OutOfGridError",
    "SINK",
    "SOURCE",
    "SurfaceWeights",
    "TerminalArcHasNoMateError",
    "TerminalHasNoBlockError",
    "TooManySegmentsError",
    "VolumeDims",
    "bk_maxflow",
    "bk_parallel_maxflow",
    "build_offset_cache",
    "build_st_graph",
    "edge_base",
    "extract_surface",
    "flow_violations",
    "mate",
    "min_cut",
    "oracle_maxflow",
    "pr_parallel_maxflow",
    "push_relabel_maxflow",
    "solve",
    "store_to_edge_list",
    "vertex_index",
]
