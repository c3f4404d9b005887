"""Overlap-managed metric-space indexing: ball-partition overlap heuristics,
a forest of generalized-hyperplane trees, and exact routed kNN search."""

from .core import (
    ConfigError,
    CostCounters,
    DataError,
    DataObject,
    Dataset,
    DistanceFn,
    EngineError,
    EUCLIDEAN,
    GeometryError,
    centroid,
    distance,
    load_csv,
    metric_by_name,
)
from .dbscan import DbscanParams, Partition, absorb_noise, epsilon_neighborhood, run_dbscan
from .forest import Forest, QueryResult, forest_knn, recall_at_k, select_indexes
from .geometry import Ball, OverlapRegime, OverlapReport, dbm_rate, obm_rate, vbm_rate
from .ghtree import GhTree, estimate_query_radius, knn_search
from .pipeline import BuildConfig, BuildResult, run_build
from .planner import IndexPlan, OverlapLevel, Thresholds, classify, plan_indexes

__version__ = "0.1.0"

__all__ = [
    "Ball",
    "BuildConfig",
    "BuildResult",
    "ConfigError",
    "CostCounters",
    "DataError",
    "DataObject",
    "Dataset",
    "DbscanParams",
    "DistanceFn",
    "EngineError",
    "EUCLIDEAN",
    "Forest",
    "GeometryError",
    "GhTree",
    "IndexPlan",
    "OverlapLevel",
    "OverlapRegime",
    "OverlapReport",
    "Partition",
    "QueryResult",
    "Thresholds",
    "absorb_noise",
    "centroid",
    "classify",
    "dbm_rate",
    "distance",
    "epsilon_neighborhood",
    "estimate_query_radius",
    "forest_knn",
    "knn_search",
    "load_csv",
    "metric_by_name",
    "obm_rate",
    "plan_indexes",
    "recall_at_k",
    "run_build",
    "run_dbscan",
    "select_indexes",
    "vbm_rate",
    "__version__",
]
