"""Versioned on-disk forest artifact.

A single JSON document holding the dataset, every tree (nodes flattened into
a list with child indices, which keeps encoding independent of tree depth),
and the plan provenance. Floats survive the JSON round trip exactly, so a
loaded forest answers queries byte-identically to the one that was saved.
"""
from __future__ import annotations

import json

import numpy as np

from .core import DataError, Dataset
from .forest import Forest
from .ghtree import GhTree, InternalNode, LeafNode
from .planner import GroupKind, PlanSummary

MAGIC = "ballforest-forest"
VERSION = 1


def _flatten_nodes(root) -> list[dict]:
    nodes: list[dict] = []
    stack = [(root, None, None)]  # (node, parent index, side)
    while stack:
        node, parent, side = stack.pop()
        idx = len(nodes)
        if isinstance(node, LeafNode):
            nodes.append({"type": "leaf", "bucket": list(node.bucket)})
        else:
            nodes.append(
                {
                    "type": "internal",
                    "p1": [float(v) for v in node.p1],
                    "p2": [float(v) for v in node.p2],
                    "r1": node.r1,
                    "r2": node.r2,
                    "left": None,
                    "right": None,
                }
            )
            stack.append((node.left, idx, "left"))
            stack.append((node.right, idx, "right"))
        if parent is not None:
            nodes[parent][side] = idx
    return nodes


def _rebuild_nodes(nodes: list[dict]):
    built: list = [None] * len(nodes)
    for idx in range(len(nodes) - 1, -1, -1):
        entry = nodes[idx]
        if entry["type"] == "leaf":
            built[idx] = LeafNode(list(entry["bucket"]))
        else:
            built[idx] = InternalNode(
                p1=np.array(entry["p1"], dtype=np.float64),
                p2=np.array(entry["p2"], dtype=np.float64),
                r1=float(entry["r1"]),
                r2=float(entry["r2"]),
                left=built[entry["left"]],
                right=built[entry["right"]],
            )
    return built[0]


def save_forest(forest: Forest, path: str) -> None:
    doc = {
        "magic": MAGIC,
        "version": VERSION,
        "method": forest.method,
        "metric": forest.metric,
        "plan_summary": forest.plan_summary.as_dict(),
        "dataset": {
            "dimension": forest.dataset.dimension,
            "coords": [[float(v) for v in row] for row in forest.dataset.matrix],
        },
        "trees": [
            {
                "tree_id": t.tree_id,
                "kind": t.kind.value,
                "size": t.size,
                "c_max": t.c_max,
                "center": [float(v) for v in t.center],
                "radius": t.radius,
                "neighbor_ids": list(t.neighbor_ids),
                "nodes": _flatten_nodes(t.root),
            }
            for t in forest.trees
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)


def load_forest(path: str) -> Forest:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise DataError(f"cannot read forest artifact {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataError(f"forest artifact {path} is not valid JSON: {exc}") from exc
    if doc.get("magic") != MAGIC:
        raise DataError(f"{path} is not a forest artifact (bad magic header)")
    if doc.get("version") != VERSION:
        raise DataError(
            f"unsupported forest artifact version {doc.get('version')} (expected {VERSION})"
        )
    ds = Dataset(np.array(doc["dataset"]["coords"], dtype=np.float64))
    summary = PlanSummary(method=doc["method"])
    for key, value in doc["plan_summary"].items():
        if hasattr(summary, key):
            setattr(summary, key, value)
    trees = [
        GhTree(
            root=_rebuild_nodes(entry["nodes"]),
            size=int(entry["size"]),
            c_max=int(entry["c_max"]),
            center=np.array(entry["center"], dtype=np.float64),
            radius=float(entry["radius"]),
            kind=GroupKind(entry["kind"]),
            dataset=ds,
            tree_id=int(entry["tree_id"]),
            neighbor_ids=[int(n) for n in entry["neighbor_ids"]],
        )
        for entry in doc["trees"]
    ]
    return Forest(
        trees=trees,
        method=doc["method"],
        plan_summary=summary,
        dataset=ds,
        metric=doc.get("metric", "euclidean"),
    )
