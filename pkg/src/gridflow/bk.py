"""Serial BK augmenting-path maxflow on structured instances.

Two search trees grow from ``s`` and ``t`` along residual edges until they
touch; the path through the contact edge is augmented, saturated tree edges
turn their children into orphans, and orphans are re-attached or freed.
No timestamps or distance heuristics are used when re-attaching orphans.

The state can be restricted to a tile (a set of vertices sharing a tile id)
so that the parallel backend can run independent searches per tile and
later merge tiles while keeping the trees.
"""

from __future__ import annotations

import threading
from collections import deque

from .preflow import FlowResult
from .structured_graph import CapacityStore

FREE = 0
SOURCE_TREE = 1
SINK_TREE = 2

TERMINAL = -1  # parent of a tree root
NO_PARENT = -2  # orphan or free


class BKState:
    """Search trees over one residual store.

    ``parent_edge[v]`` is the flat index of the tree edge in flow direction:
    the half-edge at the parent for source-tree vertices, the half-edge at
    ``v`` for sink-tree vertices.  Roots use :data:`TERMINAL`.
    """

    def __init__(self, residual: CapacityStore, tile_of: list[int] | None = None):
        dims = residual.dims
        n = dims.n
        self.residual = residual
        self.dims = dims
        self.tree = bytearray(n)
        self.parent = [NO_PARENT] * n
        self.parent_edge = [NO_PARENT] * n
        self.tile_of = tile_of
        self.queues: dict[int, deque] = {}
        self.queued = bytearray(n)
        self.flow_value = 0
        self.augmentations = 0
        self._lock = threading.Lock()

    def queue_for(self, tile: int) -> deque:
        q = self.queues.get(tile)
        if q is None:
            q = self.queues[tile] = deque()
        return q

    def activate(self, v: int):
        if not self.queued[v] and self.tree[v] != FREE:
            self.queued[v] = 1
            tile = self.tile_of[v] if self.tile_of is not None else 0
            self.queue_for(tile).append(v)

    def init_terminal_trees(self, vertices=None) -> int:
        """Pre-push ``min(r_sv, r_vt)`` and plant roots; returns flow moved."""
        dims = self.dims
        res = self.residual.view
        epn = dims.edges_per_node
        src, snk = dims.source_slot, dims.sink_slot
        moved = 0
        for v in range(dims.n) if vertices is None else vertices:
            base = v * epn
            a = res[base + src]
            b = res[base + snk]
            m = a if a < b else b
            if m:
                a -= m
                b -= m
                res[base + src] = a
                res[base + snk] = b
                moved += m
            if a:
                self.tree[v] = SOURCE_TREE
            elif b:
                self.tree[v] = SINK_TREE
            else:
                continue
            self.parent[v] = TERMINAL
            self.parent_edge[v] = TERMINAL
            self.activate(v)
        self.flow_value += moved
        return moved

    def solve(self, tile: int = 0) -> int:
        """Run grow/augment/adopt until the tile's active queue is empty.

        Returns the flow augmented by this call.  Calls for different tiles
        touch disjoint vertices and may run concurrently.
        """
        gained = 0
        augmentations = 0
        queue = self.queue_for(tile)
        dims = self.dims
        res = self.residual.view
        cache = self.residual.cache
        tables = cache.bounded_tables
        sr = dims.column_size
        epn = dims.edges_per_node
        columns = dims.columns
        tree = self.tree
        parent = self.parent
        parent_edge = self.parent_edge
        tile_of = self.tile_of
        while queue:
            p = queue[0]
            tp = tree[p]
            if tp == FREE:
                queue.popleft()
                self.queued[p] = 0
                continue
            c = p // sr
            table = tables[0 if c == 0 else (2 if c == columns - 1 else 1)][p % sr]
            base = p * epn
            contact = None
            for slot, dm, dw in table:
                q = p + dw
                if tile_of is not None and tile_of[q] != tile_of[p]:
                    continue
                e = base + slot
                if tp == SOURCE_TREE:
                    if not res[e]:
                        continue
                    edge = e
                else:
                    if not res[e + dm]:
                        continue
                    edge = e + dm
                tq = tree[q]
                if tq == FREE:
                    tree[q] = tp
                    parent[q] = p
                    parent_edge[q] = edge
                    self.activate(q)
                elif tq != tp:
                    contact = edge
                    break
            if contact is None:
                queue.popleft()
                self.queued[p] = 0
                continue
            gained += self._augment(contact, res, cache.flat, cache.period, epn)
            augmentations += 1
        with self._lock:
            self.flow_value += gained
            self.augmentations += augmentations
        return gained

    def _augment(self, contact: int, res, flat, period: int, epn: int):
        dims = self.dims
        parent = self.parent
        parent_edge = self.parent_edge
        # contact runs from a source-tree vertex to a sink-tree vertex
        x = contact // epn
        y = (contact + flat[contact % period]) // epn
        if self.tree[x] != SOURCE_TREE:
            x, y = y, x
        bottleneck = res[contact]
        v = x
        while parent[v] != TERMINAL:
            r = res[parent_edge[v]]
            if r < bottleneck:
                bottleneck = r
            v = parent[v]
        r = res[v * epn + dims.source_slot]
        if r < bottleneck:
            bottleneck = r
        v = y
        while parent[v] != TERMINAL:
            r = res[parent_edge[v]]
            if r < bottleneck:
                bottleneck = r
            v = parent[v]
        r = res[v * epn + dims.sink_slot]
        if r < bottleneck:
            bottleneck = r

        orphans = deque()
        res[contact] -= bottleneck
        res[contact + flat[contact % period]] += bottleneck
        for start, terminal_slot in ((x, dims.source_slot), (y, dims.sink_slot)):
            v = start
            while parent[v] != TERMINAL:
                e = parent_edge[v]
                res[e] -= bottleneck
                res[e + flat[e % period]] += bottleneck
                u = parent[v]
                if not res[e]:
                    parent[v] = NO_PARENT
                    parent_edge[v] = NO_PARENT
                    orphans.append(v)
                v = u
            e = v * epn + terminal_slot
            res[e] -= bottleneck
            if not res[e]:
                parent[v] = NO_PARENT
                parent_edge[v] = NO_PARENT
                orphans.append(v)
        self._adopt(orphans, res, epn)
        return bottleneck

    def _has_terminal_origin(self, v: int) -> bool:
        parent = self.parent
        while True:
            p = parent[v]
            if p == TERMINAL:
                return True
            if p == NO_PARENT:
                return False
            v = p

    def _adopt(self, orphans: deque, res, epn: int):
        dims = self.dims
        cache = self.residual.cache
        tables = cache.bounded_tables
        sr = dims.column_size
        columns = dims.columns
        tree = self.tree
        parent = self.parent
        parent_edge = self.parent_edge
        tile_of = self.tile_of
        while orphans:
            o = orphans.popleft()
            to = tree[o]
            base = o * epn
            if to == SOURCE_TREE and res[base + dims.source_slot]:
                parent[o] = parent_edge[o] = TERMINAL
                continue
            if to == SINK_TREE and res[base + dims.sink_slot]:
                parent[o] = parent_edge[o] = TERMINAL
                continue
            c = o // sr
            table = tables[0 if c == 0 else (2 if c == columns - 1 else 1)][o % sr]
            adopted = False
            for slot, dm, dw in table:
                q = o + dw
                if tree[q] != to or (tile_of is not None and tile_of[q] != tile_of[o]):
                    continue
                e = base + slot
                edge = e + dm if to == SOURCE_TREE else e
                if res[edge] and self._has_terminal_origin(q):
                    parent[o] = q
                    parent_edge[o] = edge
                    adopted = True
                    break
            if adopted:
                continue
            for slot, dm, dw in table:
                q = o + dw
                if tree[q] != to or (tile_of is not None and tile_of[q] != tile_of[o]):
                    continue
                e = base + slot
                edge = e + dm if to == SOURCE_TREE else e
                if res[edge]:
                    self.activate(q)
                if parent[q] == o:
                    parent[q] = NO_PARENT
                    parent_edge[q] = NO_PARENT
                    orphans.append(q)
            tree[o] = FREE


def bk_maxflow(instance: CapacityStore) -> FlowResult:
    residual = instance.copy()
    state = BKState(residual)
    state.init_terminal_trees()
    state.solve()
    return FlowResult(
        value=state.flow_value,
        instance=instance,
        residual=residual,
        backend="bk-serial",
        stats={"augmentations": state.augmentations},
    )
