import math

import numpy as np
import pytest

from mldfs.codegen import ClassifierNetlist, compile_forest, netlist_report
from mldfs.delay import ClassBoundaries
from mldfs.ml import Dataset, HyperParams, TrainedForest, Tree, train_forest

B2 = ClassBoundaries.standard(2)


def leaf():
    return Tree(np.array([-1], np.int32), np.zeros(1), np.array([-1], np.int32),
                np.array([-1], np.int32), np.array([[1, 0]]))


def stump():
    return Tree(np.array([0, -1, -1], np.int32), np.array([4.5, 0, 0]),
                np.array([1, -1, -1], np.int32), np.array([2, -1, -1], np.int32),
                np.array([[0, 0], [1, 0], [0, 1]]))


def chain_tree(depth):
    """A degenerate tree of the given depth (every right child is a leaf)."""
    n = 2 * depth + 1
    feat = np.full(n, -1, np.int32)
    left = np.full(n, -1, np.int32)
    right = np.full(n, -1, np.int32)
    counts = np.zeros((n, 2), np.int64)
    node = 0
    for d in range(depth):
        feat[node] = 0
        left[node], right[node] = node + 2, node + 1
        counts[node + 1] = (1, 0)
        node += 2
    counts[node] = (0, 1)
    return Tree(feat, np.zeros(n), left, right, counts)


def forest(trees):
    return TrainedForest(B2, trees, HyperParams(n_estimators=len(trees)), 6)


def test_single_stump():
    nl = compile_forest(forest([stump()]))
    assert nl.critical_depth == 1 and nl.stages == 1 and nl.n_comparators == 1
    assert nl.latency == pytest.approx(0.15)
    assert nl.e_per_classification == pytest.approx(0.005 * (1 + 1))


def test_ten_depth8_trees():
    nl = compile_forest(forest([chain_tree(8)] * 10))
    assert nl.critical_depth == 12
    assert nl.latency == pytest.approx(1.8)
    assert nl.stages == 1
    assert "stages=1" in netlist_report(nl)


def test_degenerate_forest():
    nl = compile_forest(forest([leaf()] * 4))
    assert nl.n_comparators == 0
    assert nl.e_per_classification == pytest.approx(0.005 * 4)
    assert "comparators=0" in netlist_report(nl)


def test_stage_split():
    # 100 trees of depth 8: 15 levels, 2.25 ns
    nl = compile_forest(forest([chain_tree(8)] * 100), ClassBoundaries.standard(4))
    assert nl.critical_depth == 15
    assert nl.stages == math.ceil(2.25 / 1.0)


def test_stages_monotone():
    prev = 0
    for d in range(1, 20):
        s = compile_forest(forest([chain_tree(d)] * 3)).stages
        assert s >= prev
        prev = s
    prev = 0
    for n in (1, 2, 5, 16, 100, 300):
        s = compile_forest(forest([chain_tree(6)] * n), ClassBoundaries.standard(4)).stages
        assert s >= prev
        prev = s


def test_round_trip():
    rng = np.random.default_rng(0)
    X = rng.integers(0, 33, size=(300, 6))
    m = train_forest(Dataset(X, (X[:, 0] > 16).astype(int), 2), HyperParams(n_estimators=3), B2)
    nl = compile_forest(m)
    assert ClassifierNetlist.from_json(nl.to_json()) == nl
    assert nl.e_per_classification > 0


def test_empty_forest():
    with pytest.raises(ValueError):
        compile_forest(forest([]))
