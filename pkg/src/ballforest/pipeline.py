"""End-to-end build: ingest -> cluster -> absorb noise -> plan -> build trees.

Costs are tracked per phase (preprocess, plan, tree_build) because the phases
have very different scaling: density clustering is quadratic in the dataset
while tree construction is near-linearithmic, and the reports keep them
separate so index-construction costs stay comparable across methods.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import ghtree
from .core import ConfigError, CostCounters, Dataset, DistanceFn, metric_by_name
from .dbscan import DbscanParams, absorb_noise, run_dbscan
from .forest import Forest
from .planner import IndexPlan, Thresholds, baseline_plan, plan_indexes

METHODS = ("vbm", "dbm", "obm", "baseline")
PHASES = ("preprocess", "plan", "tree_build")


@dataclass
class BuildConfig:
    method: str = "vbm"
    epsilon: float | None = None
    min_pts: int | None = None
    xi_min: float = 0.4
    xi_max: float = 0.8
    metric: str = "euclidean"
    seed: int = 0
    input_path: str | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        Thresholds(self.xi_min, self.xi_max)  # range check
        metric_by_name(self.metric)
        if self.method != "baseline":
            if self.epsilon is None or self.min_pts is None:
                raise ConfigError(
                    f"method {self.method!r} needs --epsilon and --minpts for the clustering stage"
                )
            DbscanParams(self.epsilon, self.min_pts)  # range check
            if self.metric != "euclidean":
                raise ConfigError(
                    "overlap geometry assumes the euclidean metric; "
                    "other metrics are supported only with method 'baseline'"
                )


@dataclass
class BuildResult:
    forest: Forest
    plan: IndexPlan
    phase_counters: dict[str, CostCounters]
    elapsed: float
    config: BuildConfig


def run_build(ds: Dataset, cfg: BuildConfig) -> BuildResult:
    cfg.validate()
    fn = metric_by_name(cfg.metric)
    counters = {name: CostCounters() for name in PHASES}
    start = time.perf_counter()

    if cfg.method == "baseline":
        plan = baseline_plan(ds, fn, counters["plan"])
    else:
        params = DbscanParams(cfg.epsilon, cfg.min_pts)
        partitions, noise = run_dbscan(ds, params, fn, counters["preprocess"])
        partitions = absorb_noise(partitions, noise, ds, fn, counters["preprocess"])
        plan = plan_indexes(
            partitions, cfg.method, Thresholds(cfg.xi_min, cfg.xi_max), ds, fn, counters["plan"]
        )

    trees = [
        ghtree.build(
            group,
            ds,
            fn,
            counters["tree_build"],
            tree_id=i,
            neighbor_ids=plan.neighbors.get(i, []),
        )
        for i, group in enumerate(plan.groups)
    ]
    forest = Forest(
        trees=trees, method=cfg.method, plan_summary=plan.summary, dataset=ds, metric=cfg.metric
    )
    return BuildResult(
        forest=forest,
        plan=plan,
        phase_counters=counters,
        elapsed=time.perf_counter() - start,
        config=cfg,
    )


def build_stats_report(result: BuildResult) -> dict:
    """Machine-readable build report: phase costs, plan summary, tree shapes."""
    per_tree = [ghtree.tree_stats(t).as_dict() for t in result.forest.trees]
    totals = CostCounters()
    for c in result.phase_counters.values():
        totals.merge(c)
    cfg = result.config
    return {
        "schema_version": 1,
        "kind": "build",
        "method": cfg.method,
        "params": {
            "epsilon": cfg.epsilon,
            "min_pts": cfg.min_pts,
            "xi_min": cfg.xi_min,
            "xi_max": cfg.xi_max,
            "metric": cfg.metric,
            "seed": cfg.seed,
            "input": cfg.input_path,
        },
        "phases": {name: c.as_dict() for name, c in result.phase_counters.items()},
        "plan_summary": result.plan.summary.as_dict(),
        "trees": per_tree,
        "totals": {
            "objects": len(result.forest.dataset),
            "trees": len(result.forest.trees),
            **totals.as_dict(),
        },
        "elapsed_s": result.elapsed,
    }
