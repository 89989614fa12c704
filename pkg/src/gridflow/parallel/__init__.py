"""Column-partitioned parallel push-relabel."""

from .partition import Partition, partition
from .push_relabel import (
    ParallelPushRelabel,
    level_synchronized_global_relabel,
    pr_parallel_maxflow,
)
from .sync import RWLock

__all__ = [
    "Partition",
    "ParallelPushRelabel",
    "RWLock",
    "level_synchronized_global_relabel",
    "partition",
    "pr_parallel_maxflow",
]
