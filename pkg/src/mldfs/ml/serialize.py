"""JSON model files.

Schema::

    {"algo": "rf"|"nn", "boundaries": [...], "hyper": {...}, "n_features": int,
     "trees": [{"nodes": [{"feature": f, "threshold": t, "left": l, "right": r}
                          | {"class_counts": [...]}, ...]}, ...]}
    or, for "nn",  "net": {"mean", "std", "W1", "b1", "W2", "b2"}

Floats are written with ``repr`` precision, so a save/load round trip is lossless.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ..delay import ClassBoundaries
from .forest import HyperParams, TrainedForest, Tree
from .nn import TrainedNet


def model_to_dict(model) -> dict:
    doc = {"algo": model.algo, "boundaries": list(model.boundaries.uppers),
           "hyper": model.hyper.to_dict(), "n_features": int(model.n_features)}
    if model.algo == "rf":
        doc["trees"] = [{"nodes": _tree_nodes(t)} for t in model.trees]
    else:
        doc["net"] = {k: getattr(model, k).tolist()
                      for k in ("mean", "std", "W1", "b1", "W2", "b2")}
    return doc


def _tree_nodes(t: Tree) -> list[dict]:
    nodes = []
    for i in range(t.n_nodes):
        if t.feature[i] < 0:
            nodes.append({"class_counts": [int(c) for c in t.counts[i]]})
        else:
            nodes.append({"feature": int(t.feature[i]), "threshold": float(t.threshold[i]),
                          "left": int(t.left[i]), "right": int(t.right[i])})
    return nodes


def _tree_from_nodes(nodes: list[dict], n_classes: int) -> Tree:
    n = len(nodes)
    if n == 0:
        raise ValueError("malformed model: empty tree")
    feat = np.full(n, -1, dtype=np.int32)
    thr = np.zeros(n)
    left = np.full(n, -1, dtype=np.int32)
    right = np.full(n, -1, dtype=np.int32)
    counts = np.zeros((n, n_classes), dtype=np.int64)
    for i, nd in enumerate(nodes):
        if "class_counts" in nd:
            cc = nd["class_counts"]
            if len(cc) != n_classes:
                raise ValueError(f"malformed model: leaf {i} has {len(cc)} class counts")
            counts[i] = cc
        else:
            feat[i], thr[i], left[i], right[i] = nd["feature"], nd["threshold"], nd["left"], nd["right"]
            if not (0 < left[i] < n and 0 < right[i] < n) or not np.isfinite(thr[i]):
                raise ValueError(f"malformed model: bad inner node {i}")
    return Tree(feat, thr, left, right, counts)


def model_from_dict(doc: dict):
    bounds = ClassBoundaries(tuple(doc["boundaries"]))
    hyper = HyperParams(**doc["hyper"])
    if doc["algo"] == "rf":
        trees = [_tree_from_nodes(t["nodes"], bounds.n_classes) for t in doc["trees"]]
        return TrainedForest(bounds, trees, hyper, int(doc["n_features"]))
    if doc["algo"] == "nn":
        net = {k: np.asarray(v, dtype=np.float64) for k, v in doc["net"].items()}
        return TrainedNet(bounds, net["mean"], net["std"], net["W1"], net["b1"],
                          net["W2"], net["b2"], hyper)
    raise ValueError(f"unknown algo {doc['algo']!r}")


def dumps_model(model) -> str:
    return json.dumps(model_to_dict(model), indent=1) + "\n"


def loads_model(text: str):
    return model_from_dict(json.loads(text))


def save_model(model, path) -> None:
    Path(path).write_text(dumps_model(model))


def load_model(path):
    return loads_model(Path(path).read_text())
