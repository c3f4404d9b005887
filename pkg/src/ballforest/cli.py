"""Operator CLI: generate fixtures, build forests, run query workloads, and
compare methods side by side.

Every flag can also be supplied through an environment variable with the
``BALLFOREST_`` prefix (``--xi-min`` -> ``BALLFOREST_XI_MIN``). Exit codes:
0 success, 1 verification failure, 2 configuration error, 3 data error.
"""
from __future__ import annotations

import argparse
import json
import os
import statistics
import sys

import numpy as np

from . import artifact, datagen, oracles
from .core import ConfigError, DataError, DataObject, EngineError, load_csv, metric_by_name
from .forest import forest_knn, recall_at_k
from .geometry import vbm_rate
from .oracles import OracleConfig, closed_form_lens_2d_3d, mc_lens_volume, random_partial_pair
from .pipeline import BuildConfig, build_stats_report, run_build

ENV_PREFIX = "BALLFOREST_"
DEFAULT_K_LIST = "5,10,15,20,50,100"


def _env_name(flag: str) -> str:
    return ENV_PREFIX + flag.lstrip("-").replace("-", "_").upper()


def _env(flag: str, cast, fallback=None):
    raw = os.environ.get(_env_name(flag))
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"environment variable {_env_name(flag)}={raw!r} is not valid")


def _flag(parser, flag, *, cast=str, fallback=None, help="", **kwargs):
    parser.add_argument(flag, type=cast, default=_env(flag, cast, fallback), help=help, **kwargs)


def _bool_flag(parser, flag, help=""):
    parser.add_argument(
        flag,
        action="store_true",
        default=bool(_env(flag, lambda s: s.lower() in ("1", "true", "yes"), False)),
        help=help,
    )


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="ballforest",
        description="Overlap-managed forest of generalized-hyperplane trees for exact kNN search.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    b = sub.add_parser("build", help="ingest a CSV dataset and build one forest")
    _flag(b, "--input", help="dataset CSV (one vector per line)")
    _flag(b, "--method", fallback="vbm", help="vbm | dbm | obm | baseline")
    _flag(b, "--epsilon", cast=float, help="clustering neighborhood radius")
    _flag(b, "--minpts", cast=int, help="minimum neighborhood size for a core object")
    _flag(b, "--xi-min", cast=float, fallback=0.4, help="low/medium overlap threshold")
    _flag(b, "--xi-max", cast=float, fallback=0.8, help="medium/high overlap threshold")
    _flag(b, "--metric", fallback="euclidean", help="distance function name")
    _flag(b, "--seed", cast=int, fallback=0, help="rng seed recorded with the build")
    _flag(b, "--out", help="forest artifact path (default: <input>.<method>.forest.json)")

    q = sub.add_parser("query", help="run a kNN workload against a saved forest")
    _flag(q, "--input", help="forest artifact produced by build")
    _flag(q, "--queries", help="query CSV, same dimension as the dataset")
    _flag(q, "--k", cast=int, fallback=10, help="neighbors per query")
    _flag(q, "--metric", help="must match the build metric; defaults to it")
    _bool_flag(q, "--oracle", help="also run the brute-force oracle and report recall")
    _flag(q, "--out", help="JSON report path (default: stdout)")
    _flag(q, "--rows-csv", help="also write per-query rows as CSV")

    c = sub.add_parser("bench", help="build every method on one input and compare query costs")
    _flag(c, "--input", help="dataset CSV")
    _flag(c, "--epsilon", cast=float, help="clustering neighborhood radius")
    _flag(c, "--minpts", cast=int, help="minimum neighborhood size for a core object")
    _flag(c, "--xi-min", cast=float, fallback=0.4)
    _flag(c, "--xi-max", cast=float, fallback=0.8)
    _flag(c, "--metric", fallback="euclidean")
    _flag(c, "--seed", cast=int, fallback=0)
    _flag(c, "--k", fallback=DEFAULT_K_LIST, help="comma-separated k values")
    _flag(c, "--queries", help="query CSV; default samples dataset members")
    _flag(c, "--num-queries", cast=int, fallback=100)
    _bool_flag(c, "--oracle", help="report recall against brute force")
    _flag(c, "--out", help="JSON report path (default: stdout)")

    g = sub.add_parser("gen", help="write a seeded Gaussian-blob dataset CSV")
    _flag(g, "--out", help="dataset CSV path")
    _flag(g, "--size", cast=int, fallback=10000)
    _flag(g, "--dim", cast=int, fallback=5)
    _flag(g, "--clusters", cast=int, fallback=3)
    _flag(g, "--spread", cast=float, fallback=1.0)
    _flag(g, "--separation", cast=float, fallback=50.0)
    _flag(g, "--seed", cast=int, fallback=0)
    _flag(g, "--queries-out", help="also write fresh in-cluster query draws")
    _flag(g, "--num-queries", cast=int, fallback=100)

    v = sub.add_parser("verify", help="cross-check the geometry against independent oracles")
    _flag(v, "--seed", cast=int, fallback=0)
    _flag(v, "--mc-samples", cast=int, fallback=1_000_000)
    _flag(v, "--pairs", cast=int, fallback=100, help="random pairs per closed-form check")

    return p


def _require(value, flag: str):
    if value is None:
        raise ConfigError(f"{flag} is required (or set {_env_name(flag)})")
    return value


def _write_json(doc: dict, path: str | None) -> None:
    text = json.dumps(doc, indent=2)
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_build(args) -> int:
    cfg = BuildConfig(
        method=_require(args.method, "--method"),
        epsilon=args.epsilon,
        min_pts=args.minpts,
        xi_min=args.xi_min,
        xi_max=args.xi_max,
        metric=args.metric,
        seed=args.seed,
        input_path=_require(args.input, "--input"),
    )
    cfg.validate()
    ds = load_csv(cfg.input_path)
    result = run_build(ds, cfg)
    out = args.out or f"{cfg.input_path}.{cfg.method}.forest.json"
    artifact.save_forest(result.forest, out)
    report = build_stats_report(result)
    _write_json(report, out + ".stats.json")
    print(
        f"built method={cfg.method} objects={len(ds)} trees={len(result.forest.trees)} "
        f"tree_build_distances={result.phase_counters['tree_build'].distance_count} -> {out}"
    )
    return 0


def _load_queries(path: str, dimension: int) -> list[DataObject]:
    qs = load_csv(path)
    if qs.dimension != dimension:
        raise DataError(
            f"query dimension mismatch: expected {dimension}, got {qs.dimension}"
        )
    return list(qs)


def _query_rows(forest, queries, k, fn, with_oracle):
    rows = []
    for i, q in enumerate(queries):
        result = forest_knn(forest, q, k, fn)
        row = {
            "query_index": i,
            "k": k,
            "distances": result.counters.distance_count,
            "comparisons": result.counters.comparison_count,
            "elapsed_s": result.elapsed,
            "searched_trees": result.searched_tree_ids,
            "hits": len(result.hits),
        }
        if with_oracle:
            truth = oracles.brute_knn(forest.dataset, q, k, fn)
            row["recall"] = recall_at_k(result, truth)
        rows.append(row)
    return rows


def _aggregate(rows) -> dict:
    agg = {
        "queries": len(rows),
        "mean_distances": statistics.fmean(r["distances"] for r in rows),
        "median_distances": statistics.median(r["distances"] for r in rows),
        "mean_comparisons": statistics.fmean(r["comparisons"] for r in rows),
        "mean_elapsed_s": statistics.fmean(r["elapsed_s"] for r in rows),
        "median_elapsed_s": statistics.median(r["elapsed_s"] for r in rows),
    }
    if rows and "recall" in rows[0]:
        agg["mean_recall"] = statistics.fmean(r["recall"] for r in rows)
    return agg


def cmd_query(args) -> int:
    forest = artifact.load_forest(_require(args.input, "--input"))
    if args.metric and args.metric != forest.metric:
        raise ConfigError(
            f"forest was built with metric {forest.metric!r}; "
            f"querying with {args.metric!r} would make its pruning radii meaningless"
        )
    fn = metric_by_name(forest.metric)
    if args.k < 1:
        raise ConfigError(f"--k must be at least 1, got {args.k}")
    queries = _load_queries(_require(args.queries, "--queries"), forest.dataset.dimension)
    rows = _query_rows(forest, queries, args.k, fn, args.oracle)
    report = {
        "schema_version": 1,
        "kind": "query",
        "method": forest.method,
        "k": args.k,
        "rows": rows,
        "aggregate": _aggregate(rows),
    }
    _write_json(report, args.out)
    if args.rows_csv:
        _write_rows_csv(args.rows_csv, rows)
    return 0


def _write_rows_csv(path: str, rows) -> None:
    cols = ["query_index", "k", "distances", "comparisons", "elapsed_s", "searched_trees"]
    if rows and "recall" in rows[0]:
        cols.append("recall")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(cols) + "\n")
        for r in rows:
            vals = []
            for c in cols:
                v = r[c]
                vals.append("|".join(map(str, v)) if isinstance(v, list) else str(v))
            fh.write(",".join(vals) + "\n")


def _parse_k_list(raw: str) -> list[int]:
    items = [s for s in (t.strip() for t in str(raw).split(",")) if s]
    if not items:
        raise ConfigError("--k must list at least one value")
    try:
        ks = [int(s) for s in items]
    except ValueError:
        raise ConfigError(f"--k must be comma-separated integers, got {raw!r}")
    if any(k < 1 for k in ks):
        raise ConfigError(f"every k must be at least 1, got {ks}")
    return ks


def cmd_bench(args) -> int:
    input_path = _require(args.input, "--input")
    k_list = _parse_k_list(args.k)
    if args.num_queries < 1:
        raise ConfigError(f"--num-queries must be at least 1, got {args.num_queries}")
    ds = load_csv(input_path)
    fn = metric_by_name(args.metric)

    if args.queries:
        queries = _load_queries(args.queries, ds.dimension)
    else:
        rng = np.random.default_rng(args.seed)
        n = min(args.num_queries, len(ds))
        picks = rng.choice(len(ds), size=n, replace=False)
        queries = [DataObject(int(i), ds.matrix[int(i)]) for i in picks]

    methods_report: dict[str, dict] = {}
    for method in ("baseline", "vbm", "dbm", "obm"):
        cfg = BuildConfig(
            method=method,
            epsilon=args.epsilon,
            min_pts=args.minpts,
            xi_min=args.xi_min,
            xi_max=args.xi_max,
            metric=args.metric,
            seed=args.seed,
            input_path=input_path,
        )
        cfg.validate()
        result = run_build(ds, cfg)
        per_k = {}
        for k in k_list:
            rows = _query_rows(result.forest, queries, k, fn, args.oracle)
            per_k[str(k)] = _aggregate(rows)
        methods_report[method] = {
            "build_phases": {n_: c.as_dict() for n_, c in result.phase_counters.items()},
            "build_elapsed_s": result.elapsed,
            "trees": len(result.forest.trees),
            "plan_summary": result.plan.summary.as_dict(),
            "per_k": per_k,
        }
        print(
            f"bench method={method}: trees={len(result.forest.trees)} "
            f"tree_build_distances={result.phase_counters['tree_build'].distance_count} "
            f"mean_query_distances(k={k_list[0]})="
            f"{per_k[str(k_list[0])]['mean_distances']:.1f}"
        )

    report = {
        "schema_version": 1,
        "kind": "bench",
        "input": input_path,
        "num_queries": len(queries),
        "k_values": k_list,
        "seed": args.seed,
        "methods": methods_report,
    }
    _write_json(report, args.out)
    return 0


def cmd_gen(args) -> int:
    out = _require(args.out, "--out")
    coords, _ = datagen.gaussian_blobs(
        args.size, args.dim, args.clusters, args.spread, args.separation, args.seed
    )
    datagen.write_csv(out, coords)
    print(f"wrote {args.size} x {args.dim} points in {args.clusters} blobs -> {out}")
    if args.queries_out:
        qs = datagen.query_draws(
            args.num_queries, args.dim, args.clusters, args.spread, args.separation, args.seed + 1
        )
        datagen.write_csv(args.queries_out, qs)
        print(f"wrote {args.num_queries} query draws -> {args.queries_out}")
    return 0


def cmd_verify(args) -> int:
    rng = np.random.default_rng(args.seed)
    checks: list[tuple[str, bool, str]] = []

    worst = 0.0
    for n in (2, 3):
        for _ in range(args.pairs):
            b1, b2, d = random_partial_pair(rng, n)
            lens = vbm_rate(b1, b2, d).aux["lens_volume"]
            ref = closed_form_lens_2d_3d(b1, b2, d)
            worst = max(worst, abs(lens - ref) / ref)
    checks.append(
        (
            f"lens volume vs closed form (2-D/3-D, {args.pairs} pairs each)",
            worst <= 1e-9,
            f"worst relative error {worst:.3e}",
        )
    )

    # mid-band pairs keep the lens resolvable; tolerance is 2% at the
    # default sample count, or 4 standard errors with fewer samples
    worst, ok_mc = 0.0, True
    for i in range(10):
        b1, b2, d = random_partial_pair(rng, 5, min_frac=0.1, max_frac=0.6)
        lens = vbm_rate(b1, b2, d).aux["lens_volume"]
        est, stderr = mc_lens_volume(b1, b2, OracleConfig(args.mc_samples, args.seed + i))
        rel = abs(lens - est) / lens
        worst = max(worst, rel)
        ok_mc &= rel <= max(0.02, 4.0 * stderr / lens)
    checks.append(
        (
            "lens volume vs Monte Carlo (5-D, 10 pairs)",
            ok_mc,
            f"worst relative error {worst:.3e}",
        )
    )

    worst = 0.0
    for _ in range(1000):
        b1, b2, d = random_partial_pair(rng, 3)
        report = vbm_rate(b1, b2, d)
        h_sum = report.aux["cap_height_1"] + report.aux["cap_height_2"]
        expect = b1.radius + b2.radius - d
        worst = max(worst, abs(h_sum - expect) / expect)
    checks.append(
        (
            "cap height sum identity (1000 pairs)",
            worst <= 1e-9,
            f"worst relative error {worst:.3e}",
        )
    )

    ok_all = True
    for name, ok, detail in checks:
        ok_all &= ok
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if ok_all else 1


COMMANDS = {
    "build": cmd_build,
    "query": cmd_query,
    "bench": cmd_bench,
    "gen": cmd_gen,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except EngineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
