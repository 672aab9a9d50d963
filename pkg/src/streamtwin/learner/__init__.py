"""From-scratch tree-ensemble learning: trees, boosting, bagging, search, stats."""

from .boosting import GBDTConfig, TreeEnsemble, fit_gbdt, predict, predict_matrix, staged_predictions
from .forest import ForestConfig, ForestModel, fit_random_forest, forest_predict
from .importance import gain_importance, permutation_importance
from .search import SearchSpace, halving_search
from .serialize import ensemble_from_dict, ensemble_to_dict, load_model, save_model
from .stats import Metrics, mae, metrics, pearson, rmse, spearman
from .trees import TreeConfig, TreeNode, fit_tree, tree_predict

__all__ = [
    "GBDTConfig",
    "TreeEnsemble",
    "fit_gbdt",
    "predict",
    "predict_matrix",
    "staged_predictions",
    "ForestConfig",
    "ForestModel",
    "fit_random_forest",
    "forest_predict",
    "gain_importance",
    "permutation_importance",
    "SearchSpace",
    "halving_search",
    "ensemble_from_dict",
    "ensemble_to_dict",
    "load_model",
    "save_model",
    "Metrics",
    "mae",
    "metrics",
    "pearson",
    "rmse",
    "spearman",
    "TreeConfig",
    "TreeNode",
    "fit_tree",
    "tree_predict",
]
