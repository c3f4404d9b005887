"""Turn scored partition pairs into a final index layout.

Every unordered pair of cluster groups is scored with the chosen overlap
heuristic and classified against two thresholds:

* high   (rate >= xi_max)          the pair is merged into one group;
* medium (xi_min <= rate < xi_max) objects inside both balls move into a new
  bridge group linked as a neighbor of both parents;
* low    (rate < xi_min)           if the balls still partially overlap, the
  parent with the smaller cap donates its overlap-region objects to the
  other parent.

Processing runs high -> medium -> low with re-scoring after every structural
change, and the whole sequence repeats until a round changes nothing (capped
at ten rounds). Bridge groups are terminal: they are never re-scored, merged
or bridged again. Pair processing order is descending rate with ties broken
by (smaller id, larger id), which makes plans reproducible.

Interval boundaries are half-open (low = [0, xi_min), medium = [xi_min,
xi_max), high = [xi_max, 1]) so every rate lands in exactly one band.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .core import (
    ConfigError,
    CostCounters,
    DataError,
    Dataset,
    DistanceFn,
    centroid,
    distance_points,
    distance_to_many,
)
from .dbscan import Partition
from .geometry import (
    Ball,
    OverlapRegime,
    cap_geometry,
    dbm_rate,
    obm_rate,
    overlap_region_members,
    vbm_rate,
)

MAX_ROUNDS = 10


class OverlapLevel(enum.Enum):
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class GroupKind(enum.Enum):
    CLUSTER = "cluster"
    BRIDGE = "overlap_bridge"


@dataclass(frozen=True)
class Thresholds:
    xi_min: float = 0.4
    xi_max: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.xi_min <= self.xi_max <= 1.0:
            raise ConfigError(
                f"thresholds must satisfy 0 <= xi_min <= xi_max <= 1, "
                f"got ({self.xi_min}, {self.xi_max})"
            )


@dataclass
class IndexGroup:
    id: int
    kind: GroupKind
    member_ids: list[int]
    center: np.ndarray
    radius: float

    def ball(self) -> Ball:
        return Ball(self.center, self.radius)


@dataclass
class PlanSummary:
    method: str
    initial_partitions: int = 0
    rounds: int = 0
    merges: int = 0
    bridges: int = 0
    low_transfers: int = 0
    objects_bridged: int = 0
    objects_transferred: int = 0
    groups_dropped: int = 0
    initial_level_counts: dict[str, int] = field(default_factory=dict)
    neighbor_edges: int = 0
    group_count: int = 0

    def as_dict(self) -> dict:
        return {
            "method": self.method,
            "initial_partitions": self.initial_partitions,
            "rounds": self.rounds,
            "merges": self.merges,
            "bridges": self.bridges,
            "low_transfers": self.low_transfers,
            "objects_bridged": self.objects_bridged,
            "objects_transferred": self.objects_transferred,
            "groups_dropped": self.groups_dropped,
            "initial_level_counts": dict(self.initial_level_counts),
            "neighbor_edges": self.neighbor_edges,
            "group_count": self.group_count,
        }


@dataclass
class IndexPlan:
    """Final layout: disjoint groups covering all objects plus neighbor edges.

    ``neighbors`` is a symmetric adjacency over positions in ``groups``.
    """

    groups: list[IndexGroup]
    neighbors: dict[int, list[int]]
    summary: PlanSummary


def classify(rate: float, th: Thresholds) -> OverlapLevel:
    if rate >= th.xi_max:
        return OverlapLevel.HIGH
    if rate >= th.xi_min:
        return OverlapLevel.MEDIUM
    return OverlapLevel.LOW


def _recompute(group: IndexGroup, ds: Dataset, fn: DistanceFn, counters: CostCounters) -> None:
    coords = ds.coords_of(group.member_ids)
    group.center = centroid(coords)
    dists = distance_to_many(group.center, coords, fn, counters)
    counters.add_comparisons(len(group.member_ids))
    group.radius = float(dists.max())


def _as_partition(group: IndexGroup) -> Partition:
    return Partition(group.id, group.member_ids, group.center, group.radius)


def _score_pair(
    g1: IndexGroup,
    g2: IndexGroup,
    method: str,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> tuple[float, float, OverlapRegime]:
    """Returns (rate, center distance, regime) for one cluster pair."""
    dist = distance_points(g1.center, g2.center, fn, counters)
    if method == "vbm":
        report = vbm_rate(g1.ball(), g2.ball(), dist)
    elif method == "dbm":
        report = dbm_rate(g1.ball(), g2.ball(), dist)
    elif method == "obm":
        report = obm_rate(_as_partition(g1), _as_partition(g2), dist, ds, fn, counters)
    else:
        raise ConfigError(f"unknown overlap method {method!r}")
    return report.rate, dist, report.regime


class _Planner:
    def __init__(self, partitions, method, th, ds, fn, counters):
        self.method = method
        self.th = th
        self.ds = ds
        self.fn = fn
        self.counters = counters
        self.groups: dict[int, IndexGroup] = {}
        self.edges: set[tuple[int, int]] = set()
        self.summary = PlanSummary(method=method, initial_partitions=len(partitions))
        for i, part in enumerate(partitions):
            self.groups[i] = IndexGroup(
                i, GroupKind.CLUSTER, sorted(part.member_ids), np.array(part.pivot), part.radius
            )
        self.next_id = len(partitions)
        self._score_cache: dict[tuple[int, int], tuple[float, float, OverlapRegime]] = {}

    # -- bookkeeping -------------------------------------------------------

    def _cluster_ids(self) -> list[int]:
        return sorted(g for g, grp in self.groups.items() if grp.kind is GroupKind.CLUSTER)

    def _add_edge(self, a: int, b: int) -> None:
        if a != b:
            self.edges.add((min(a, b), max(a, b)))

    def _touch(self, gid: int) -> None:
        # a group changed or disappeared; its pair scores are stale
        self._score_cache = {k: v for k, v in self._score_cache.items() if gid not in k}

    def _remove_group(self, gid: int) -> None:
        del self.groups[gid]
        self.edges = {e for e in self.edges if gid not in e}
        self._touch(gid)

    def _drop_group(self, gid: int) -> None:
        # a group emptied by extraction or transfer
        self._remove_group(gid)
        self.summary.groups_dropped += 1

    def _score_clusters(self) -> dict[tuple[int, int], tuple[float, float, OverlapRegime]]:
        ids = self._cluster_ids()
        scores = {}
        for idx, a in enumerate(ids):
            for b in ids[idx + 1 :]:
                key = (a, b)
                cached = self._score_cache.get(key)
                if cached is None:
                    cached = _score_pair(
                        self.groups[a], self.groups[b], self.method, self.ds, self.fn, self.counters
                    )
                    self._score_cache[key] = cached
                scores[key] = cached
        return scores

    @staticmethod
    def _ordered(scores, level_filter):
        keyed = [
            (-rate, a, b)
            for (a, b), (rate, _, _) in scores.items()
            if level_filter(rate)
        ]
        keyed.sort()
        return [(a, b) for _, a, b in keyed]

    # -- the three phases --------------------------------------------------

    def _merge_high(self) -> bool:
        changed = False
        while True:
            scores = self._score_clusters()
            high = [
                pair
                for pair, (rate, _, _) in scores.items()
                if classify(rate, self.th) is OverlapLevel.HIGH
            ]
            if not high:
                return changed
            for component in _components(high):
                keep = min(component)
                members: set[int] = set()
                for gid in component:
                    members.update(self.groups[gid].member_ids)
                merged = IndexGroup(keep, GroupKind.CLUSTER, sorted(members), None, 0.0)
                _recompute(merged, self.ds, self.fn, self.counters)
                inherited = {
                    other
                    for gid in component
                    for e in self.edges
                    if gid in e
                    for other in e
                    if other not in component
                }
                for gid in component:
                    self._remove_group(gid)
                self.groups[keep] = merged
                for other in inherited:
                    self._add_edge(keep, other)
                self.summary.merges += 1
            changed = True

    def _extract_medium(self) -> bool:
        # one structural change per scoring pass; no-change pairs are marked
        # processed and retried against the same scores
        changed = False
        processed: set[tuple[int, int]] = set()
        while True:
            scores = self._score_clusters()
            candidates = [
                pair
                for pair in self._ordered(
                    scores, lambda r: classify(r, self.th) is OverlapLevel.MEDIUM
                )
                if pair not in processed
            ]
            progressed = False
            for a, b in candidates:
                processed.add((a, b))
                if self._extract_bridge(a, b):
                    changed = progressed = True
                    break
            if not progressed:
                return changed

    def _extract_bridge(self, a: int, b: int) -> bool:
        g1, g2 = self.groups[a], self.groups[b]
        shared = overlap_region_members(
            g1.member_ids + g2.member_ids, g1.ball(), g2.ball(), self.ds, self.fn, self.counters
        )
        if not shared:
            return False
        shared_set = set(shared)
        bridge = IndexGroup(self.next_id, GroupKind.BRIDGE, sorted(shared_set), None, 0.0)
        self.next_id += 1
        _recompute(bridge, self.ds, self.fn, self.counters)
        self.groups[bridge.id] = bridge
        for gid in (a, b):
            grp = self.groups[gid]
            grp.member_ids = [m for m in grp.member_ids if m not in shared_set]
            if grp.member_ids:
                _recompute(grp, self.ds, self.fn, self.counters)
                self._touch(gid)
                self._add_edge(bridge.id, gid)
            else:
                self._drop_group(gid)
        self.summary.bridges += 1
        self.summary.objects_bridged += len(shared_set)
        return True

    def _transfer_low(self) -> bool:
        changed = False
        processed: set[tuple[int, int]] = set()
        while True:
            scores = self._score_clusters()
            candidates = [
                pair
                for pair in self._ordered(
                    scores,
                    lambda r: classify(r, self.th) is OverlapLevel.LOW,
                )
                if pair not in processed
                and scores[pair][2] is OverlapRegime.PARTIAL_OVERLAP
            ]
            progressed = False
            for pair in candidates:
                processed.add(pair)
                if self._transfer_overlap(pair, scores[pair][1]):
                    changed = progressed = True
                    break
            if not progressed:
                return changed

    def _transfer_overlap(self, pair: tuple[int, int], dist: float) -> bool:
        g1, g2 = self.groups[pair[0]], self.groups[pair[1]]
        _, h1 = cap_geometry(g1.ball(), g2.ball(), dist)
        _, h2 = cap_geometry(g2.ball(), g1.ball(), dist)
        donor, receiver = (g1, g2) if (h1, g1.id) < (h2, g2.id) else (g2, g1)
        moving = overlap_region_members(
            donor.member_ids, donor.ball(), receiver.ball(), self.ds, self.fn, self.counters
        )
        if not moving:
            return False
        moving_set = set(moving)
        donor.member_ids = [m for m in donor.member_ids if m not in moving_set]
        receiver.member_ids = sorted(receiver.member_ids + moving)
        _recompute(receiver, self.ds, self.fn, self.counters)
        self._touch(receiver.id)
        if donor.member_ids:
            _recompute(donor, self.ds, self.fn, self.counters)
            self._touch(donor.id)
        else:
            self._drop_group(donor.id)
        self.summary.low_transfers += 1
        self.summary.objects_transferred += len(moving)
        return True

    # -- driver --------------------------------------------------------------

    def run(self) -> IndexPlan:
        initial = self._score_clusters()
        counts = {"low": 0, "medium": 0, "high": 0}
        for rate, _, _ in initial.values():
            counts[classify(rate, self.th).value] += 1
        self.summary.initial_level_counts = counts

        for round_no in range(1, MAX_ROUNDS + 1):
            changed = self._merge_high()
            changed = self._extract_medium() or changed
            changed = self._transfer_low() or changed
            self.summary.rounds = round_no
            if not changed:
                break
        return self._compact()

    def _compact(self) -> IndexPlan:
        order = sorted(self.groups)
        index_of = {gid: i for i, gid in enumerate(order)}
        groups = [self.groups[gid] for gid in order]
        for i, g in enumerate(groups):
            g.id = i
        neighbors: dict[int, list[int]] = {i: [] for i in range(len(groups))}
        for a, b in self.edges:
            neighbors[index_of[a]].append(index_of[b])
            neighbors[index_of[b]].append(index_of[a])
        for i in neighbors:
            neighbors[i] = sorted(neighbors[i])
        self.summary.neighbor_edges = len(self.edges)
        self.summary.group_count = len(groups)
        return IndexPlan(groups, neighbors, self.summary)


def _components(edges: list[tuple[int, int]]) -> list[list[int]]:
    adj: dict[int, set[int]] = {}
    for a, b in edges:
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    seen: set[int] = set()
    components = []
    for start in sorted(adj):
        if start in seen:
            continue
        stack, comp = [start], []
        while stack:
            node = stack.pop()
            if node in seen:
                continue
            seen.add(node)
            comp.append(node)
            stack.extend(adj[node] - seen)
        components.append(sorted(comp))
    return components


def plan_indexes(
    partitions: list[Partition],
    method: str,
    th: Thresholds,
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> IndexPlan:
    """Score all partition pairs and derive the final index layout."""
    if not partitions:
        raise DataError("cannot plan indexes over an empty partition list")
    if method not in ("vbm", "dbm", "obm"):
        raise ConfigError(f"unknown overlap method {method!r}")
    return _Planner(partitions, method, th, ds, fn, counters).run()


def baseline_plan(ds: Dataset, fn: DistanceFn, counters: CostCounters) -> IndexPlan:
    """Single group holding the whole dataset (no overlap management)."""
    group = IndexGroup(0, GroupKind.CLUSTER, list(range(len(ds))), None, 0.0)
    _recompute(group, ds, fn, counters)
    summary = PlanSummary(method="baseline", initial_partitions=1, group_count=1)
    return IndexPlan([group], {0: []}, summary)
