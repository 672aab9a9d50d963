"""Feature attribution: split-gain totals and permutation deltas."""

from __future__ import annotations

import numpy as np

from ..util import rng_from
from .boosting import TreeEnsemble, predict_matrix
from .forest import ForestModel, forest_predict
from .trees import TreeNode

__all__ = ["gain_importance", "permutation_importance"]


def _accumulate_gain(node: TreeNode, totals: dict[int, float]) -> None:
    if node.is_leaf:
        return
    totals[node.feature] = totals.get(node.feature, 0.0) + node.gain
    _accumulate_gain(node.left, totals)
    _accumulate_gain(node.right, totals)


def gain_importance(model: TreeEnsemble | ForestModel) -> dict[str, float]:
    """Total split gain per feature, normalized to sum to 1 (zeros if no splits)."""
    totals: dict[int, float] = {}
    for tree in model.trees:
        _accumulate_gain(tree, totals)
    grand = sum(totals.values())
    if grand <= 0.0:
        return {name: 0.0 for name in model.feature_names}
    return {
        name: totals.get(j, 0.0) / grand for j, name in enumerate(model.feature_names)
    }


def _model_predict(model: TreeEnsemble | ForestModel, X: np.ndarray) -> np.ndarray:
    if isinstance(model, TreeEnsemble):
        return predict_matrix(model, X)
    return forest_predict(model, X)


def permutation_importance(
    model: TreeEnsemble | ForestModel,
    X: np.ndarray,
    y: np.ndarray,
    repeats: int = 5,
    seed: int = 0,
) -> dict[str, float]:
    """Mean MAE increase when a column is shuffled; 0 for unused features."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    rng = rng_from(seed, 0xFE)
    baseline = float(np.mean(np.abs(_model_predict(model, X) - y)))
    out: dict[str, float] = {}
    for j, name in enumerate(model.feature_names):
        deltas = []
        for _ in range(repeats):
            shuffled = X.copy()
            shuffled[:, j] = shuffled[rng.permutation(X.shape[0]), j]
            mae = float(np.mean(np.abs(_model_predict(model, shuffled) - y)))
            deltas.append(mae - baseline)
        out[name] = float(np.mean(deltas))
    return out
