"""Bagged variance-reduction forest used for feature screening."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from .trees import TreeConfig, TreeNode, fit_tree, tree_predict

__all__ = ["ForestConfig", "ForestModel", "fit_random_forest", "forest_predict"]


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int = 6
    min_samples_leaf: int = 2
    max_features: float = 1.0 / 3.0
    bootstrap: bool = True

    def validate(self) -> None:
        if self.n_trees < 1:
            raise ConfigurationError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0.0 < self.max_features <= 1.0:
            raise ConfigurationError(f"max_features must be in (0, 1], got {self.max_features}")
        TreeConfig(self.max_depth, self.min_samples_leaf, 0.0).validate()


@dataclass
class ForestModel:
    feature_names: list[str]
    trees: list[TreeNode] = field(default_factory=list)


def fit_random_forest(
    X: np.ndarray,
    y: np.ndarray,
    config: ForestConfig,
    seed: int | np.random.SeedSequence,
    feature_names: list[str] | None = None,
) -> ForestModel:
    """Fit bootstrap trees with a fresh random feature subset at every split.

    Trees regress on the raw target with unit hessians and no leaf penalty,
    so a single unbagged full-feature tree degenerates to plain fit_tree.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n, d = X.shape
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    rng = np.random.Generator(np.random.PCG64(seed))
    per_split = max(1, math.ceil(config.max_features * d))
    tree_cfg = TreeConfig(config.max_depth, config.min_samples_leaf, 0.0)

    model = ForestModel(feature_names=list(feature_names))
    for _ in range(config.n_trees):
        rows = rng.integers(0, n, size=n) if config.bootstrap else np.arange(n)
        model.trees.append(
            fit_tree(
                X[rows],
                y[rows],
                np.ones(n, dtype=np.float64),
                tree_cfg,
                rng=rng,
                max_features_per_split=per_split if per_split < d else None,
            )
        )
    return model


def forest_predict(model: ForestModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    total = np.zeros(X.shape[0], dtype=np.float64)
    for tree in model.trees:
        total += tree_predict(tree, X)
    return total / len(model.trees)
