"""Gain (MDI) and permutation importance, checked against manual traversal."""

from __future__ import annotations

import numpy as np
import pytest

from streamtwin.learner.boosting import GBDTConfig, fit_gbdt
from streamtwin.learner.forest import ForestConfig, fit_random_forest
from streamtwin.learner.importance import gain_importance, permutation_importance
from streamtwin.learner.trees import TreeNode


def manual_gain_totals(trees: list[TreeNode], n_features: int) -> np.ndarray:
    totals = np.zeros(n_features)

    def walk(node: TreeNode) -> None:
        if node.is_leaf:
            return
        assert node.feature is not None and node.left is not None and node.right is not None
        totals[node.feature] += node.gain
        walk(node.left)
        walk(node.right)

    for tree in trees:
        walk(tree)
    return totals


def test_gain_importance_matches_manual_sum_and_normalizes() -> None:
    rng = np.random.default_rng(0)
    X = rng.normal(size=(80, 4))
    y = 2 * X[:, 0] + X[:, 2] + 0.1 * rng.normal(size=80)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=10, max_depth=2), seed=0,
                     feature_names=["a", "b", "c", "d"])
    imp = gain_importance(model)
    totals = manual_gain_totals(model.trees, 4)
    expected = totals / totals.sum()
    assert [imp[n] for n in ("a", "b", "c", "d")] == pytest.approx(expected.tolist())
    assert sum(imp.values()) == pytest.approx(1.0)


def test_gain_importance_orders_signal_features_first() -> None:
    rng = np.random.default_rng(5)
    X = rng.normal(size=(200, 3))
    y = 5 * X[:, 1] + 0.01 * rng.normal(size=200)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=20, max_depth=2), seed=1)
    imp = gain_importance(model)
    assert imp["f1"] > 0.9
    assert imp["f1"] > imp["f0"] and imp["f1"] > imp["f2"]


def test_gain_importance_works_for_forest() -> None:
    rng = np.random.default_rng(2)
    X = rng.normal(size=(120, 3))
    y = 4 * X[:, 0] + 0.1 * rng.normal(size=120)
    forest = fit_random_forest(X, y, ForestConfig(n_trees=10, max_depth=3), seed=0)
    imp = gain_importance(forest)
    totals = manual_gain_totals(forest.trees, 3)
    expected = totals / totals.sum()
    assert [imp[n] for n in forest.feature_names] == pytest.approx(expected.tolist())


def test_gain_importance_all_zero_when_no_splits() -> None:
    X = np.zeros((10, 2))
    y = np.full(10, 3.0)
    model = fit_gbdt(X, y, GBDTConfig(n_trees=5), seed=0)
    imp = gain_importance(model)
    assert set(imp.values()) == {0.0}


def test_permutation_importance_zero_for_unused_feature() -> None:
    rng = np.random.default_rng(9)
    X = rng.normal(size=(150, 3))
    y = 3 * X[:, 0]
    model = fit_gbdt(X, y, GBDTConfig(n_trees=20, max_depth=2), seed=0)
    imp = permutation_importance(model, X, y, repeats=3, seed=4)
    assert imp["f0"] > 0.5
    # Signal-free columns may never be split on; shuffling them must not matter.
    assert imp["f1"] == pytest.approx(0.0, abs=1e-9)
    assert imp["f2"] == pytest.approx(0.0, abs=1e-9)


def test_permutation_importance_deterministic_per_seed() -> None:
    rng = np.random.default_rng(10)
    X = rng.normal(size=(60, 2))
    y = X[:, 0] - X[:, 1]
    model = fit_gbdt(X, y, GBDTConfig(n_trees=10), seed=0)
    a = permutation_importance(model, X, y, repeats=4, seed=1)
    b = permutation_importance(model, X, y, repeats=4, seed=1)
    c = permutation_importance(model, X, y, repeats=4, seed=2)
    assert a == b
    assert a != c
