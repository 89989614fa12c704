"""Exception types raised across gridflow.

Each class carries a stable ``code`` string so the CLI and reports can name
the failure without parsing messages.
"""

from __future__ import annotations


class GridFlowError(Exception):
    code = "GRIDFLOW_ERROR"


class OutOfGridError(GridFlowError, IndexError):
    code = "OUT_OF_GRID"


class TerminalHasNoBlockError(GridFlowError, ValueError):
    code = "TERMINAL_HAS_NO_BLOCK"


class TerminalArcHasNoMateError(GridFlowError, ValueError):
    code = "TERMINAL_ARC_HAS_NO_MATE"


class NonConvexPriorError(GridFlowError, ValueError):
    code = "NON_CONVEX_PRIOR"


class CapacityOverflowError(GridFlowError, OverflowError):
    code = "CAPACITY_OVERFLOW"


class EmptyColumnError(GridFlowError, ValueError):
    code = "EMPTY_COLUMN"


class FlowNotMaximalError(GridFlowError, RuntimeError):
    code = "FLOW_NOT_MAXIMAL"


class TooManySegmentsError(GridFlowError, ValueError):
    code = "TOO_MANY_SEGMENTS"


class FormatError(GridFlowError, ValueError):
    """Malformed instance file. ``offset`` is the byte (or line) position."""

    code = "PARSE_ERROR"

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset
