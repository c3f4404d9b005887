"""Query routing over a forest of trees: closest-index selection, per-tree
search under the parallel contract, and gathering of a global top-k.

A query first ranks every tree by center distance, then searches the closest
tree plus its declared neighbors. Per-tree searches are independent read-only
tasks with private counters; results are gathered in selection order, so
concurrent and sequential execution produce identical output. When the
selected trees yield fewer than k hits, the remaining trees are searched in
ascending center distance until k hits exist or the forest is exhausted.
"""
from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, CostCounters, DataObject, Dataset, DistanceFn
from .ghtree import GhTree, estimate_query_radius, knn_search
from .planner import PlanSummary


@dataclass
class Forest:
    trees: list[GhTree]
    method: str
    plan_summary: PlanSummary
    dataset: Dataset
    metric: str = "euclidean"

    def total_objects(self) -> int:
        return sum(t.size for t in self.trees)


@dataclass
class QueryResult:
    hits: list[tuple[int, float]]
    searched_tree_ids: list[int]
    counters: CostCounters
    elapsed: float
    tree_counters: dict[int, CostCounters] = field(default_factory=dict)
    selection_counters: CostCounters = field(default_factory=CostCounters)


def _rank_trees(
    forest: Forest, q: DataObject, fn: DistanceFn, counters: CostCounters
) -> tuple[int, dict[int, float]]:
    """Closest tree id plus center distances; one evaluation and one
    comparison per candidate tree."""
    best_id, best_dist = -1, math.inf
    dists: dict[int, float] = {}
    for tree in forest.trees:
        d = fn.pair(q.coords, tree.center)
        counters.add_distances(1)
        counters.add_comparisons(1)
        dists[tree.tree_id] = d
        if d < best_dist:
            best_id, best_dist = tree.tree_id, d
    return best_id, dists


def select_indexes(
    forest: Forest, q: DataObject, fn: DistanceFn, counters: CostCounters
) -> list[GhTree]:
    """The tree with the nearest center followed by its neighbors."""
    if not forest.trees:
        raise ConfigError("forest holds no trees")
    best_id, _ = _rank_trees(forest, q, fn, counters)
    by_id = {t.tree_id: t for t in forest.trees}
    closest = by_id[best_id]
    return [closest] + [by_id[nid] for nid in closest.neighbor_ids]


def _search_one(tree: GhTree, q: DataObject, k: int, fn: DistanceFn):
    counters = CostCounters()
    seed = estimate_query_radius(tree, q, k, fn, counters)
    hits = knn_search(tree, q, k, fn, counters, r_init=seed)
    return tree.tree_id, hits, counters


def forest_knn(
    forest: Forest,
    q: DataObject,
    k: int,
    fn: DistanceFn,
    parallel: bool = False,
) -> QueryResult:
    """Route, search, and gather the global top-k for one query."""
    if k < 1:
        raise ConfigError(f"k must be at least 1, got {k}")
    if q.coords.shape[0] != forest.dataset.dimension:
        raise ConfigError(
            f"query dimension {q.coords.shape[0]} does not match "
            f"dataset dimension {forest.dataset.dimension}"
        )
    start = time.perf_counter()
    selection = CostCounters()
    best_id, center_dists = _rank_trees(forest, q, fn, selection)
    by_id = {t.tree_id: t for t in forest.trees}
    closest = by_id[best_id]
    selected = [closest] + [by_id[nid] for nid in closest.neighbor_ids]

    searched_ids: list[int] = []
    tree_counters: dict[int, CostCounters] = {}
    merged: dict[int, float] = {}

    def run_batch(trees: list[GhTree]) -> None:
        if parallel and len(trees) > 1:
            with ThreadPoolExecutor(max_workers=len(trees)) as pool:
                outcomes = list(pool.map(lambda t: _search_one(t, q, k, fn), trees))
        else:
            outcomes = [_search_one(t, q, k, fn) for t in trees]
        for tid, hits, counters in outcomes:  # gather in selection order
            searched_ids.append(tid)
            tree_counters[tid] = counters
            for oid, dist in hits:
                if oid not in merged or dist < merged[oid]:
                    merged[oid] = dist

    run_batch(selected)

    if len(merged) < k:
        selected_ids = {t.tree_id for t in selected}
        remaining = sorted(
            (t for t in forest.trees if t.tree_id not in selected_ids),
            key=lambda t: (center_dists[t.tree_id], t.tree_id),
        )
        for tree in remaining:
            if len(merged) >= k:
                break
            run_batch([tree])

    hits = sorted(((oid, dist) for oid, dist in merged.items()), key=lambda h: (h[1], h[0]))[:k]
    total = CostCounters()
    total.merge(selection)
    for tid in sorted(tree_counters):
        total.merge(tree_counters[tid])
    return QueryResult(
        hits=hits,
        searched_tree_ids=searched_ids,
        counters=total,
        elapsed=time.perf_counter() - start,
        tree_counters=tree_counters,
        selection_counters=selection,
    )


def recall_at_k(result: QueryResult, oracle_hits: list[tuple[int, float]]) -> float:
    """Fraction of the oracle's k hits recovered, matched by distance multiset.

    Equal distances count as matches regardless of which tied object was
    returned. Distances are compared with a small relative tolerance because
    the two sides may batch their vector arithmetic differently.
    """
    if len(result.hits) != len(oracle_hits):
        raise ConfigError(
            f"hit-count mismatch: result has {len(result.hits)}, oracle has {len(oracle_hits)}"
        )
    if not oracle_hits:
        raise ConfigError("recall over an empty hit list is undefined")
    got = sorted(d for _, d in result.hits)
    want = sorted(d for _, d in oracle_hits)
    matched = 0
    i = j = 0
    while i < len(got) and j < len(want):
        if math.isclose(got[i], want[j], rel_tol=1e-9, abs_tol=1e-12):
            matched += 1
            i += 1
            j += 1
        elif got[i] < want[j]:
            i += 1
        else:
            j += 1
    return matched / len(want)
