"""Binary generalized-hyperplane tree with bucket leaves and exact kNN search.

Each internal node keeps two pivot points taken from the data, routes an
object left when it is at least as close to the first pivot as to the second
(ties go left so the split is a disjoint cover), and stores one covering
radius per pivot over the whole subtree. Leaves hold up to ceil(sqrt(n))
object ids, with n the tree's object count at build time.

Search is best-first branch and bound: children enter a priority queue keyed
by the lower bound max(0, d(q, p_i) - r_i) and a subtree is pruned when its
bound exceeds the current pruning radius. The pruning radius starts from a
caller-supplied seed (normally produced by :func:`estimate_query_radius`) and
shrinks to the running k-th best distance once k candidates are held. A seed
that is too small can only under-fill the result, never corrupt it; an
under-filled pass is detected and rerun unseeded, which keeps the search
exact for every seed.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .core import ConfigError, CostCounters, DataObject, Dataset, DistanceFn, distance_points, distance_to_many
from .planner import GroupKind, IndexGroup


@dataclass
class LeafNode:
    bucket: list[int]


@dataclass
class InternalNode:
    p1: np.ndarray
    p2: np.ndarray
    r1: float
    r2: float
    left: "Node" = None
    right: "Node" = None


Node = Union[LeafNode, InternalNode]


@dataclass
class GhTree:
    root: Node
    size: int
    c_max: int
    center: np.ndarray
    radius: float
    kind: GroupKind
    dataset: Dataset
    tree_id: int = 0
    neighbor_ids: list[int] = field(default_factory=list)


def bucket_capacity(n: int) -> int:
    """ceil(sqrt(n)), at least 1."""
    if n <= 1:
        return 1
    c = math.isqrt(n)
    return c if c * c == n else c + 1


def select_pivots(
    object_ids: list[int],
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> tuple[np.ndarray, np.ndarray] | None:
    """Two far-apart member points via the double scan heuristic.

    Scan 1 finds the object farthest from the lowest-id object; scan 2 finds
    the object farthest from that one. Returns None when all points coincide
    (no positive-distance pivot pair exists); the caller then falls back to
    an oversized leaf. Ties resolve to the lowest id.
    """
    if len(object_ids) < 2:
        raise ConfigError("pivot selection needs at least two objects")
    coords = ds.coords_of(object_ids)
    d_first = distance_to_many(coords[0], coords, fn, counters)
    counters.add_comparisons(len(object_ids))
    if d_first.max() == 0.0:
        return None
    a = int(d_first.argmax())
    d_a = distance_to_many(coords[a], coords, fn, counters)
    counters.add_comparisons(len(object_ids))
    b = int(d_a.argmax())
    return coords[a].copy(), coords[b].copy()


def _split_with_distances(object_ids, p1, p2, ds, fn, counters):
    coords = ds.coords_of(object_ids)
    d1 = distance_to_many(p1, coords, fn, counters)
    d2 = distance_to_many(p2, coords, fn, counters)
    counters.add_comparisons(len(object_ids))
    go_left = d1 <= d2
    left = [oid for oid, flag in zip(object_ids, go_left) if flag]
    right = [oid for oid, flag in zip(object_ids, go_left) if not flag]
    return (left, right), (d1, d2)


def gh_split(
    object_ids: list[int],
    p1: np.ndarray,
    p2: np.ndarray,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> tuple[list[int], list[int]]:
    """Split ids by nearer pivot; equidistant objects go left.

    Costs exactly two distance evaluations and one comparison per object.
    """
    (left, right), _ = _split_with_distances(object_ids, p1, p2, ds, fn, counters)
    return left, right


def build(
    group: IndexGroup,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
    tree_id: int = 0,
    neighbor_ids: list[int] | None = None,
) -> GhTree:
    """Build the tree for one index group.

    Covering radii reuse the split distances, so an internal node over m
    objects costs 4m distance evaluations (two pivot scans, one split) and
    5m comparisons. Unsplittable or degenerate sets become leaves even when
    oversized; the stats traversal surfaces those.
    """
    if not group.member_ids:
        raise ConfigError("cannot build a tree over an empty group")
    ids = sorted(group.member_ids)
    c_max = bucket_capacity(len(ids))
    holder: list[Node] = [None]
    stack: list[tuple[list[int], object, object]] = [(ids, holder, 0)]
    while stack:
        node_ids, container, slot = stack.pop()
        node = _make_node(node_ids, c_max, ds, fn, counters, stack)
        if isinstance(container, list):
            container[slot] = node
        else:
            setattr(container, slot, node)
    return GhTree(
        root=holder[0],
        size=len(ids),
        c_max=c_max,
        center=np.array(group.center),
        radius=group.radius,
        kind=group.kind,
        dataset=ds,
        tree_id=tree_id,
        neighbor_ids=sorted(neighbor_ids or []),
    )


def _make_node(node_ids, c_max, ds, fn, counters, stack) -> Node:
    if len(node_ids) <= c_max:
        return LeafNode(node_ids)
    pivots = select_pivots(node_ids, ds, fn, counters)
    if pivots is None:
        return LeafNode(node_ids)
    p1, p2 = pivots
    (left, right), (d1, d2) = _split_with_distances(node_ids, p1, p2, ds, fn, counters)
    if not left or not right:
        return LeafNode(node_ids)
    counters.add_comparisons(2 * len(node_ids))  # two covering-radius maxima
    node = InternalNode(p1, p2, float(d1.max()), float(d2.max()))
    stack.append((left, node, "left"))
    stack.append((right, node, "right"))
    return node


def estimate_query_radius(
    tree: GhTree,
    q: DataObject,
    k: int,
    fn: DistanceFn,
    counters: CostCounters,
) -> float:
    """Greedy-descent seed for the pruning radius.

    Walk toward the nearer pivot at each internal node; at the reached leaf
    return the k-th smallest member distance, or the largest one when the
    bucket holds fewer than k members.
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    node = tree.root
    while isinstance(node, InternalNode):
        d1 = distance_points(q.coords, node.p1, fn, counters)
        d2 = distance_points(q.coords, node.p2, fn, counters)
        counters.add_comparisons(1)
        node = node.left if d1 <= d2 else node.right
    dists = distance_to_many(q.coords, tree.dataset.coords_of(node.bucket), fn, counters)
    counters.add_comparisons(len(node.bucket))
    if len(dists) >= k:
        return float(np.partition(dists, k - 1)[k - 1])
    return float(dists.max())


class _TopK:
    """Bounded max-heap of (distance, id), worst entry on top."""

    def __init__(self, k: int):
        self.k = k
        self._heap: list[tuple[float, int]] = []

    def __len__(self) -> int:
        return len(self._heap)

    def worst(self) -> tuple[float, int]:
        d, i = self._heap[0]
        return -d, -i

    def offer(self, dist: float, oid: int) -> None:
        if len(self._heap) < self.k:
            heapq.heappush(self._heap, (-dist, -oid))
        elif (dist, oid) < self.worst():
            heapq.heapreplace(self._heap, (-dist, -oid))

    def sorted_hits(self) -> list[tuple[int, float]]:
        return [(-i, -d) for d, i in sorted(self._heap, reverse=True)]


def knn_search(
    tree: GhTree,
    q: DataObject,
    k: int,
    fn: DistanceFn,
    counters: CostCounters,
    r_init: float = math.inf,
    prune: bool = True,
) -> list[tuple[int, float]]:
    """Exact k nearest neighbors within the tree, sorted by (distance, id).

    Returns every object when the tree holds fewer than k. ``r_init`` seeds
    the pruning radius; if the seeded pass under-fills (possible when the
    seed came from a bucket smaller than k), the search reruns without a
    seed, so the result is exact for any ``r_init``.
    """
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    hits = _search_pass(tree, q, k, fn, counters, r_init, prune)
    if len(hits) < min(k, tree.size) and r_init != math.inf:
        hits = _search_pass(tree, q, k, fn, counters, math.inf, prune)
    return hits


def _search_pass(tree, q, k, fn, counters, r_init, prune) -> list[tuple[int, float]]:
    best = _TopK(k)

    def pruning_radius() -> float:
        return best.worst()[0] if len(best) == k else r_init

    heap: list[tuple[float, int, Node]] = [(0.0, 0, tree.root)]
    seq = 1
    while heap:
        bound, _, node = heapq.heappop(heap)
        if prune:
            counters.add_comparisons(1)
            if bound > pruning_radius():
                continue
        if isinstance(node, LeafNode):
            dists = distance_to_many(q.coords, tree.dataset.coords_of(node.bucket), fn, counters)
            counters.add_comparisons(len(node.bucket))
            for oid, d in zip(node.bucket, dists):
                d = float(d)
                if d <= pruning_radius():
                    best.offer(d, oid)
        else:
            d1 = distance_points(q.coords, node.p1, fn, counters)
            d2 = distance_points(q.coords, node.p2, fn, counters)
            heapq.heappush(heap, (max(0.0, d1 - node.r1), seq, node.left))
            heapq.heappush(heap, (max(0.0, d2 - node.r2), seq + 1, node.right))
            seq += 2
    return best.sorted_hits()


@dataclass
class TreeStats:
    tree_id: int
    kind: str
    size: int
    c_max: int
    height: int
    internal_nodes: int
    leaf_count: int
    bucket_histogram: dict[int, int]
    nodes_per_level: list[int]
    oversized_leaves: int

    def as_dict(self) -> dict:
        return {
            "tree_id": self.tree_id,
            "kind": self.kind,
            "size": self.size,
            "c_max": self.c_max,
            "height": self.height,
            "internal_nodes": self.internal_nodes,
            "leaf_count": self.leaf_count,
            "bucket_histogram": {str(k): v for k, v in sorted(self.bucket_histogram.items())},
            "nodes_per_level": self.nodes_per_level,
            "oversized_leaves": self.oversized_leaves,
        }


def tree_stats(tree: GhTree) -> TreeStats:
    """Structural metrics: height, node counts, bucket sizes, level profile."""
    internal = 0
    leaves = 0
    histogram: dict[int, int] = {}
    per_level: list[int] = []
    oversized = 0
    frontier = [tree.root]
    level = 0
    while frontier:
        per_level.append(len(frontier))
        nxt = []
        for node in frontier:
            if isinstance(node, LeafNode):
                leaves += 1
                size = len(node.bucket)
                histogram[size] = histogram.get(size, 0) + 1
                if size > tree.c_max:
                    oversized += 1
            else:
                internal += 1
                nxt.extend((node.left, node.right))
        frontier = nxt
        level += 1
    return TreeStats(
        tree_id=tree.tree_id,
        kind=tree.kind.value,
        size=tree.size,
        c_max=tree.c_max,
        height=len(per_level) - 1,
        internal_nodes=internal,
        leaf_count=leaves,
        bucket_histogram=histogram,
        nodes_per_level=per_level,
        oversized_leaves=oversized,
    )


def audit_tree(tree: GhTree, fn: DistanceFn, tol: float = 1e-9) -> dict:
    """Post-build structural audit.

    Checks that each internal node's covering radii bound the distance from
    its pivots to every object in the node's subtree, that pivot pairs are
    distinct, and that the buckets partition the tree's object set.
    """
    failures: list[str] = []
    all_ids: list[int] = []

    def visit(node) -> list[int]:
        if isinstance(node, LeafNode):
            all_ids.extend(node.bucket)
            return node.bucket
        ids = visit(node.left) + visit(node.right)
        coords = tree.dataset.coords_of(ids)
        d1 = fn.many(node.p1, coords)
        d2 = fn.many(node.p2, coords)
        if d1.max() > node.r1 + tol:
            failures.append(f"covering radius r1 violated: {d1.max()} > {node.r1}")
        if d2.max() > node.r2 + tol:
            failures.append(f"covering radius r2 violated: {d2.max()} > {node.r2}")
        if float(fn.many(node.p1, node.p2.reshape(1, -1))[0]) <= 0.0:
            failures.append("internal node pivots coincide")
        return ids

    visit(tree.root)
    if len(all_ids) != len(set(all_ids)):
        failures.append("duplicate object ids across buckets")
    if len(all_ids) != tree.size:
        failures.append(f"tree size mismatch: {len(all_ids)} != {tree.size}")
    return {"ok": not failures, "failures": failures, "object_count": len(all_ids)}
