"""Core metric-space types: data objects, datasets, distance functions, cost counters.

Cost accounting rules used throughout the package:

* ``distance_count`` grows by 1 for every pairwise distance evaluation; a
  vectorized call against ``m`` rows counts ``m``.
* ``comparison_count`` grows by 1 for every order predicate between two
  distance-valued quantities (distances, radii, query radii). Scans count
  one comparison per candidate examined; heap bookkeeping and result
  sorting are not counted.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np


class EngineError(Exception):
    """Base class for errors raised by this package."""


class ConfigError(EngineError):
    """Invalid configuration or parameters (CLI exit code 2)."""


class DataError(EngineError):
    """Malformed or inconsistent input data (CLI exit code 3)."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GeometryError(EngineError):
    """Geometric operation evaluated outside its domain."""


@dataclass(frozen=True, eq=False)
class DataObject:
    """A vector with a stable non-negative integer id."""

    id: int
    coords: np.ndarray


class Dataset:
    """Immutable set of fixed-dimension vectors with dense ids 0..n-1.

    Ids are assigned in ingestion order, which fixes all tie-breaking
    downstream (pivot selection, result ordering, cluster visiting order).
    """

    def __init__(self, matrix: np.ndarray):
        matrix = np.ascontiguousarray(np.asarray(matrix, dtype=np.float64))
        if matrix.ndim != 2:
            raise DataError("dataset must be a 2-D array of coordinates")
        if matrix.shape[0] == 0 or matrix.shape[1] == 0:
            raise DataError("dataset must contain at least one object and one dimension")
        if not np.all(np.isfinite(matrix)):
            raise DataError("dataset contains non-finite coordinates")
        matrix.setflags(write=False)
        self._matrix = matrix

    @property
    def dimension(self) -> int:
        return self._matrix.shape[1]

    @property
    def matrix(self) -> np.ndarray:
        """Read-only (n, dimension) coordinate matrix; row index == object id."""
        return self._matrix

    def __len__(self) -> int:
        return self._matrix.shape[0]

    def object(self, oid: int) -> DataObject:
        return DataObject(oid, self._matrix[oid])

    def __iter__(self) -> Iterator[DataObject]:
        for oid in range(len(self)):
            yield DataObject(oid, self._matrix[oid])

    def coords_of(self, ids: Sequence[int]) -> np.ndarray:
        """Coordinate rows for a list of ids, in the given order."""
        return self._matrix[np.asarray(ids, dtype=np.intp)]


def _euclidean_many(point: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    diff = matrix - point
    return np.sqrt(np.einsum("ij,ij->i", diff, diff))


def _manhattan_many(point: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return np.abs(matrix - point).sum(axis=1)


def _chebyshev_many(point: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    return np.abs(matrix - point).max(axis=1)


@dataclass(frozen=True)
class DistanceFn:
    """A named metric. ``many`` evaluates one point against a matrix of rows.

    ``pair`` routes through ``many`` so scalar and batched evaluations of the
    same pair produce bitwise-identical results.
    """

    name: str
    many: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def pair(self, x: np.ndarray, y: np.ndarray) -> float:
        return float(self.many(x, y.reshape(1, -1))[0])


METRICS = {
    "euclidean": DistanceFn("euclidean", _euclidean_many),
    "manhattan": DistanceFn("manhattan", _manhattan_many),
    "chebyshev": DistanceFn("chebyshev", _chebyshev_many),
}

EUCLIDEAN = METRICS["euclidean"]


def metric_by_name(name: str) -> DistanceFn:
    try:
        return METRICS[name]
    except KeyError:
        raise ConfigError(f"unknown metric {name!r}; choose from {sorted(METRICS)}") from None


@dataclass
class CostCounters:
    """Distance and comparison tallies for one top-level operation."""

    distance_count: int = 0
    comparison_count: int = 0

    def add_distances(self, n: int = 1) -> None:
        self.distance_count += n

    def add_comparisons(self, n: int = 1) -> None:
        self.comparison_count += n

    def merge(self, other: "CostCounters") -> None:
        self.distance_count += other.distance_count
        self.comparison_count += other.comparison_count

    def as_dict(self) -> dict[str, int]:
        return {
            "distance_count": self.distance_count,
            "comparison_count": self.comparison_count,
        }


def distance(a: DataObject, b: DataObject, fn: DistanceFn, counters: CostCounters) -> float:
    """Metric value between two objects; counts exactly one evaluation."""
    if a.coords.shape != b.coords.shape:
        raise DataError(
            f"dimension mismatch: object {a.id} has {a.coords.shape[0]} "
            f"coordinates, object {b.id} has {b.coords.shape[0]}"
        )
    counters.add_distances()
    return fn.pair(a.coords, b.coords)


def distance_points(x: np.ndarray, y: np.ndarray, fn: DistanceFn, counters: CostCounters) -> float:
    """Like :func:`distance` but for raw coordinate vectors (pivots, centroids)."""
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    counters.add_distances()
    return fn.pair(x, y)


def distance_to_many(
    point: np.ndarray, matrix: np.ndarray, fn: DistanceFn, counters: CostCounters
) -> np.ndarray:
    """Distances from one point to every row of ``matrix``; counts one per row."""
    counters.add_distances(matrix.shape[0])
    return fn.many(point, matrix)


def centroid(objects: Sequence[DataObject] | np.ndarray) -> np.ndarray:
    """Component-wise mean of a non-empty collection of objects or rows."""
    if isinstance(objects, np.ndarray):
        if objects.shape[0] == 0:
            raise DataError("centroid of empty collection is undefined")
        return objects.mean(axis=0)
    if len(objects) == 0:
        raise DataError("centroid of empty collection is undefined")
    dim = objects[0].coords.shape[0]
    for o in objects:
        if o.coords.shape[0] != dim:
            raise DataError(f"dimension mismatch in centroid input: {o.coords.shape[0]} vs {dim}")
    return np.stack([o.coords for o in objects]).mean(axis=0)


def _parse_row(tokens: list[str]) -> list[float] | None:
    try:
        return [float(t) for t in tokens]
    except ValueError:
        return None


def load_csv(path: str) -> Dataset:
    """Read a dataset: one object per line, comma-separated reals.

    An optional header is auto-detected: a first non-empty line containing
    any non-numeric token is skipped. Dimension is inferred from the first
    data line; later rows must match it.
    """
    rows: list[list[float]] = []
    dimension: int | None = None
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    with fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            values = _parse_row([t.strip() for t in line.split(",")])
            if values is None:
                if not rows and dimension is None:
                    continue  # header line
                raise DataError("non-numeric value in data row", line=lineno)
            if any(not math.isfinite(v) for v in values):
                raise DataError("non-finite value in data row", line=lineno)
            if dimension is None:
                dimension = len(values)
            elif len(values) != dimension:
                raise DataError(
                    f"expected {dimension} values, got {len(values)}", line=lineno
                )
            rows.append(values)
    if not rows:
        raise DataError(f"no data rows found in {path}")
    return Dataset(np.array(rows, dtype=np.float64))
