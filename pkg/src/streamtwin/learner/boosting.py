"""Squared-error gradient boosting over the regression tree."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Mapping

import numpy as np

from ..errors import ConfigurationError, SchemaError
from .trees import TreeConfig, TreeNode, fit_tree, tree_predict

__all__ = ["GBDTConfig", "TreeEnsemble", "fit_gbdt", "predict", "predict_matrix", "staged_predictions"]


@dataclass(frozen=True)
class GBDTConfig:
    n_trees: int = 50
    max_depth: int = 3
    learning_rate: float = 0.1
    min_samples_leaf: int = 1
    colsample: float = 1.0
    l2_penalty: float = 1.0

    def validate(self) -> None:
        if self.n_trees < 0:
            raise ConfigurationError(f"n_trees must be >= 0, got {self.n_trees}")
        if not 0.0 < self.learning_rate <= 1.0:
            raise ConfigurationError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if not 0.0 < self.colsample <= 1.0:
            raise ConfigurationError(f"colsample must be in (0, 1], got {self.colsample}")
        TreeConfig(self.max_depth, self.min_samples_leaf, self.l2_penalty).validate()

    def tree_config(self) -> TreeConfig:
        return TreeConfig(self.max_depth, self.min_samples_leaf, self.l2_penalty)


@dataclass
class TreeEnsemble:
    base_score: float
    learning_rate: float
    feature_names: list[str]
    trees: list[TreeNode] = field(default_factory=list)


def fit_gbdt(
    X: np.ndarray,
    y: np.ndarray,
    config: GBDTConfig,
    seed: int | np.random.SeedSequence,
    feature_names: list[str] | None = None,
) -> TreeEnsemble:
    """Boost `config.n_trees` trees against the running residual.

    Each round fits a tree to residual = y - prediction with unit hessians,
    over a seeded column subset of ceil(colsample * d) features.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if y.shape != (n,):
        raise ConfigurationError("y must match the row count of X")
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    if len(feature_names) != d:
        raise ConfigurationError("feature_names must match the column count of X")

    rng = np.random.Generator(np.random.PCG64(seed))
    base = float(y.mean()) if n else 0.0
    ensemble = TreeEnsemble(base_score=base, learning_rate=config.learning_rate, feature_names=list(feature_names))

    hess = np.ones(n, dtype=np.float64)
    pred = np.full(n, base, dtype=np.float64)
    n_cols = max(1, math.ceil(config.colsample * d))
    tree_cfg = config.tree_config()
    for _ in range(config.n_trees):
        cols = np.sort(rng.choice(d, size=n_cols, replace=False)) if n_cols < d else None
        tree = fit_tree(X, y - pred, hess, tree_cfg, feature_indices=cols)
        ensemble.trees.append(tree)
        pred += config.learning_rate * tree_predict(tree, X)
    return ensemble


def predict_matrix(ensemble: TreeEnsemble, X: np.ndarray, n_trees: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != len(ensemble.feature_names):
        raise SchemaError(
            f"expected a matrix with {len(ensemble.feature_names)} columns, got shape {X.shape}"
        )
    out = np.full(X.shape[0], ensemble.base_score, dtype=np.float64)
    trees = ensemble.trees if n_trees is None else ensemble.trees[:n_trees]
    for tree in trees:
        out += ensemble.learning_rate * tree_predict(tree, X)
    return out


def staged_predictions(ensemble: TreeEnsemble, X: np.ndarray) -> Iterator[np.ndarray]:
    """Predictions after 0, 1, ..., n trees (for per-round diagnostics)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.full(X.shape[0], ensemble.base_score, dtype=np.float64)
    yield out.copy()
    for tree in ensemble.trees:
        out += ensemble.learning_rate * tree_predict(tree, X)
        yield out.copy()


def record_to_row(feature_names: list[str], record: Mapping[str, object]) -> np.ndarray:
    """Build one input row from a mapping; None becomes NaN, extras are ignored."""
    row = np.empty(len(feature_names), dtype=np.float64)
    missing = [name for name in feature_names if name not in record]
    if missing:
        raise SchemaError(f"record is missing feature(s): {', '.join(missing)}")
    for j, name in enumerate(feature_names):
        value = record[name]
        row[j] = np.nan if value is None else float(value)  # type: ignore[arg-type]
    return row


def predict(ensemble: TreeEnsemble, record: Mapping[str, object]) -> float:
    """Score one record given as a feature-name mapping (nulls allowed)."""
    row = record_to_row(ensemble.feature_names, record)
    return float(predict_matrix(ensemble, row.reshape(1, -1))[0])
