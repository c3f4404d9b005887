"""Density-based clustering that seeds the ball partitions.

The classic flood-fill procedure: every object is visited in ascending id
order; a core object (one whose epsilon-neighborhood holds at least
``min_pts`` objects) starts a cluster that is expanded FIFO through the
neighborhoods of its core members. Objects reachable from no core object are
noise. Cluster ids are dense starting at 1; noise is labeled 0.

Each resulting cluster becomes a Partition whose pivot is the member centroid
and whose radius is the largest pivot-to-member distance. Noise is absorbed
into the nearest partition afterwards so that every object stays searchable.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .core import (
    ConfigError,
    CostCounters,
    DataError,
    DataObject,
    Dataset,
    DistanceFn,
    centroid,
    distance_to_many,
)

NOISE = 0
_UNDEFINED = -1


@dataclass(frozen=True)
class DbscanParams:
    epsilon: float
    min_pts: int

    def __post_init__(self):
        if self.epsilon <= 0:
            raise ConfigError(f"epsilon must be positive, got {self.epsilon}")
        if self.min_pts < 1:
            raise ConfigError(f"min_pts must be at least 1, got {self.min_pts}")


@dataclass
class Partition:
    """A cluster viewed as a ball: pivot, covering radius, and member ids."""

    id: int
    member_ids: list[int]
    pivot: np.ndarray
    radius: float


def epsilon_neighborhood(
    o: DataObject,
    ds: Dataset,
    eps: float,
    fn: DistanceFn,
    counters: CostCounters,
) -> list[int]:
    """Ids of all objects within ``eps`` of ``o`` (``o`` included), ascending.

    A linear scan: n distance evaluations and n comparisons per call.
    """
    dists = distance_to_many(o.coords, ds.matrix, fn, counters)
    counters.add_comparisons(len(ds))
    return np.flatnonzero(dists <= eps).tolist()


def _neighborhood_ids(
    oid: int, ds: Dataset, eps: float, fn: DistanceFn, counters: CostCounters
) -> list[int]:
    return epsilon_neighborhood(ds.object(oid), ds, eps, fn, counters)


def make_partition(
    pid: int,
    member_ids: list[int],
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> Partition:
    """Assemble a partition: centroid pivot plus max member distance radius."""
    if not member_ids:
        raise DataError("partition must have at least one member")
    member_ids = sorted(member_ids)
    coords = ds.coords_of(member_ids)
    pivot = centroid(coords)
    dists = distance_to_many(pivot, coords, fn, counters)
    counters.add_comparisons(len(member_ids))
    return Partition(pid, member_ids, pivot, float(dists.max()))


def run_dbscan(
    ds: Dataset,
    params: DbscanParams,
    fn: DistanceFn,
    counters: CostCounters,
) -> tuple[list[Partition], list[int]]:
    """Cluster the dataset; returns (partitions, noise ids).

    Deterministic for a given dataset: objects are visited in ascending id
    order and cluster seeds expand first-in first-out.
    """
    n = len(ds)
    labels = np.full(n, _UNDEFINED, dtype=np.int64)
    cluster_id = NOISE

    for oid in range(n):
        if labels[oid] != _UNDEFINED:
            continue
        if _expand_cluster(ds, oid, cluster_id + 1, labels, params, fn, counters):
            cluster_id += 1

    partitions = [
        make_partition(cid, np.flatnonzero(labels == cid).tolist(), ds, fn, counters)
        for cid in range(1, cluster_id + 1)
    ]
    noise_ids = np.flatnonzero(labels == NOISE).tolist()
    return partitions, noise_ids


def _expand_cluster(
    ds: Dataset,
    oid: int,
    cluster_id: int,
    labels: np.ndarray,
    params: DbscanParams,
    fn: DistanceFn,
    counters: CostCounters,
) -> bool:
    seeds = _neighborhood_ids(oid, ds, params.epsilon, fn, counters)
    if len(seeds) < params.min_pts:
        labels[oid] = NOISE
        return False
    for sid in seeds:
        labels[sid] = cluster_id
    queue = deque(sid for sid in seeds if sid != oid)
    while queue:
        current = queue.popleft()
        result = _neighborhood_ids(current, ds, params.epsilon, fn, counters)
        if len(result) < params.min_pts:
            continue
        for rid in result:
            if labels[rid] in (_UNDEFINED, NOISE):
                if labels[rid] == _UNDEFINED:
                    queue.append(rid)
                labels[rid] = cluster_id
    return True


def absorb_noise(
    partitions: list[Partition],
    noise_ids: list[int],
    ds: Dataset,
    fn: DistanceFn,
    counters: CostCounters,
) -> list[Partition]:
    """Assign each noise object to the partition with the nearest pivot.

    Pivots and radii of touched partitions are recomputed once at the end,
    against the original pivots used for assignment. With no partitions at
    all, the noise forms a single fallback partition.
    """
    if not partitions:
        if not noise_ids:
            raise DataError("nothing to absorb: no partitions and no noise")
        return [make_partition(1, sorted(noise_ids), ds, fn, counters)]
    if not noise_ids:
        return partitions

    pivots = np.stack([p.pivot for p in partitions])
    added: dict[int, list[int]] = {}
    for oid in sorted(noise_ids):
        dists = distance_to_many(ds.matrix[oid], pivots, fn, counters)
        counters.add_comparisons(len(partitions))
        nearest = int(dists.argmin())
        added.setdefault(nearest, []).append(oid)

    out = []
    for idx, part in enumerate(partitions):
        if idx in added:
            out.append(
                make_partition(part.id, part.member_ids + added[idx], ds, fn, counters)
            )
        else:
            out.append(part)
    return out
