"""CART decision trees and a bootstrap random forest over integer features."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .. import _core
from ..delay import ClassBoundaries
from .dataset import Dataset

# relative guard against splits that only "improve" through rounding
_MIN_GAIN = 1e-9


def table1_estimators(n_classes: int) -> int:
    return 10 if n_classes <= 2 else 100


@dataclass
class HyperParams:
    algo: str = "rf"
    n_estimators: int = 10
    max_depth: int = 8
    min_leaf: int = 5
    feature_subsample: int | None = None   # None: ceil(sqrt(n_features))
    nn_hidden: int = 20
    nn_epochs: int = 200
    nn_lr: float = 0.1
    nn_momentum: float = 0.9
    seed: int = 0
    tie_break: str = "low"                # "low": fastest class wins ties; "high": safe
    features: str = "summary"

    def __post_init__(self):
        if self.algo not in ("rf", "nn"):
            raise ValueError(f"unknown algo {self.algo!r}")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_leaf < 1:
            raise ValueError("min_leaf must be >= 1")
        if self.tie_break not in ("low", "high"):
            raise ValueError("tie_break must be 'low' or 'high'")

    def subsample_for(self, n_features: int) -> int:
        k = self.feature_subsample or math.ceil(math.sqrt(n_features))
        return max(1, min(k, n_features))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Tree:
    feature: np.ndarray     # int32, -1 at leaves
    threshold: np.ndarray   # float64, go left iff x[feature] <= threshold
    left: np.ndarray        # int32, -1 at leaves
    right: np.ndarray
    counts: np.ndarray      # (n_nodes, n_classes) training class counts, zero at inner nodes

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def n_internal(self) -> int:
        return int((self.feature >= 0).sum())

    def leaf_class(self) -> np.ndarray:
        return np.argmax(self.counts, axis=1).astype(np.int32)

    def leaf_depths(self) -> list[int]:
        depths = []
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.feature[node] < 0:
                depths.append(d)
            else:
                stack.append((int(self.right[node]), d + 1))
                stack.append((int(self.left[node]), d + 1))
        return depths

    @property
    def depth(self) -> int:
        return max(self.leaf_depths())

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        votes = _core.forest_vote(self.feature, self.threshold, self.left, self.right,
                                  self.leaf_class(), np.array([0]), X, self.counts.shape[1])
        return np.argmax(votes, axis=1).astype(np.int32)


def gini(counts) -> float:
    counts = np.asarray(counts, dtype=np.float64)
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - (p * p).sum())


def train_tree(d: Dataset, hp: HyperParams, rng: np.random.Generator,
               idx: np.ndarray | None = None) -> Tree:
    """Greedy Gini CART on rows ``idx`` (default: all rows, repeats allowed)."""
    if len(d) == 0:
        raise ValueError("cannot train on an empty dataset")
    if idx is None:
        idx = np.arange(len(d), dtype=np.int64)
    C = d.n_classes
    k = hp.subsample_for(d.n_features)
    feat, thr, lft, rgt, cnts = [], [], [], [], []

    def new_node():
        feat.append(-1)
        thr.append(0.0)
        lft.append(-1)
        rgt.append(-1)
        cnts.append(np.zeros(C, dtype=np.int64))
        return len(feat) - 1

    def grow(rows: np.ndarray, depth: int) -> int:
        node = new_node()
        counts = np.bincount(d.y[rows], minlength=C)
        n = rows.shape[0]
        pure = int((counts > 0).sum()) <= 1
        if pure or depth >= hp.max_depth or n < 2 * hp.min_leaf:
            cnts[node] = counts
            return node
        cand = np.sort(rng.choice(d.n_features, size=k, replace=False)).astype(np.int64)
        f, t, score = _core.best_split(d.X, d.y, rows, cand, C, hp.min_leaf)
        parent = float((counts.astype(np.float64) ** 2).sum()) / n
        if f < 0 or score <= parent + _MIN_GAIN * n:
            cnts[node] = counts
            return node
        go_left = d.X[rows, f] <= t
        feat[node] = f
        thr[node] = t
        lft[node] = grow(rows[go_left], depth + 1)
        rgt[node] = grow(rows[~go_left], depth + 1)
        return node

    grow(np.asarray(idx, dtype=np.int64), 0)
    return Tree(np.array(feat, dtype=np.int32), np.array(thr, dtype=np.float64),
                np.array(lft, dtype=np.int32), np.array(rgt, dtype=np.int32),
                np.array(cnts, dtype=np.int64).reshape(len(feat), C))


def tree_streams(seed: int, n: int) -> list[np.random.Generator]:
    """Independent per-tree generators split from the master seed."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def bootstrap_indices(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, n, size=n, dtype=np.int64)


@dataclass
class TrainedForest:
    boundaries: ClassBoundaries
    trees: list[Tree]
    hyper: HyperParams
    n_features: int = 6
    _packed: tuple | None = field(default=None, repr=False, compare=False)

    algo = "rf"

    @property
    def n_classes(self) -> int:
        return self.boundaries.n_classes

    @property
    def feature_mode(self) -> str:
        return self.hyper.features

    def _pack(self):
        if self._packed is None:
            offs = np.cumsum([0] + [t.n_nodes for t in self.trees])
            shift = lambda a, o: np.where(a >= 0, a + o, -1)  # noqa: E731
            self._packed = (
                np.concatenate([t.feature for t in self.trees]).astype(np.int32),
                np.concatenate([t.threshold for t in self.trees]),
                np.concatenate([shift(t.left, o) for t, o in zip(self.trees, offs)]).astype(np.int32),
                np.concatenate([shift(t.right, o) for t, o in zip(self.trees, offs)]).astype(np.int32),
                np.concatenate([t.leaf_class() for t in self.trees]).astype(np.int32),
                offs[:-1].astype(np.int64),
            )
        return self._packed

    def votes(self, X) -> np.ndarray:
        X = np.asarray(X)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        if not self.trees:
            raise ValueError("malformed model: no trees")
        return _core.forest_vote(*self._pack(), X, self.n_classes)

    def predict_batch(self, X) -> np.ndarray:
        v = self.votes(X)
        if self.hyper.tie_break == "high":
            return (v.shape[1] - 1 - np.argmax(v[:, ::-1], axis=1)).astype(np.int32)
        return np.argmax(v, axis=1).astype(np.int32)

    def predict(self, f) -> int:
        return int(self.predict_batch(np.asarray(f)[None, :])[0])


def train_forest(d: Dataset, hp: HyperParams, boundaries: ClassBoundaries) -> TrainedForest:
    if len(d) == 0:
        raise ValueError("cannot train on an empty dataset")
    if d.n_classes != boundaries.n_classes:
        raise ValueError("dataset and boundaries disagree on the class count")
    trees = []
    for rng in tree_streams(hp.seed, hp.n_estimators):
        trees.append(train_tree(d, hp, rng, bootstrap_indices(rng, len(d))))
    return TrainedForest(boundaries, trees, hp, d.n_features)
