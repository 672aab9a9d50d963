"""Regression tree grown on gradient/hessian sums with native missing routing."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

__all__ = ["TreeConfig", "TreeNode", "fit_tree", "tree_predict"]


@dataclass(frozen=True)
class TreeConfig:
    max_depth: int = 3
    min_samples_leaf: int = 1
    l2_penalty: float = 1.0

    def validate(self) -> None:
        if self.max_depth < 0:
            raise ConfigurationError(f"max_depth must be >= 0, got {self.max_depth}")
        if self.min_samples_leaf < 1:
            raise ConfigurationError(f"min_samples_leaf must be >= 1, got {self.min_samples_leaf}")
        if self.l2_penalty < 0:
            raise ConfigurationError(f"l2_penalty must be >= 0, got {self.l2_penalty}")


@dataclass
class TreeNode:
    """Internal node (feature is an index) or leaf (feature is None)."""

    feature: int | None = None
    threshold: float = 0.0
    missing_left: bool = True
    gain: float = 0.0
    weight: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


def _best_split_for_feature(
    col: np.ndarray,
    grad: np.ndarray,
    hess: np.ndarray,
    l2: float,
    min_leaf: int,
) -> tuple[float, float, bool] | None:
    """Best (gain, threshold, missing_left) for one feature, or None.

    Candidates are midpoints between consecutive distinct sorted values;
    missing rows are tried on both sides and kept where the gain is higher
    (left on ties). Within the feature the lowest qualifying threshold wins.
    """
    miss = np.isnan(col)
    n_miss = int(miss.sum())
    present = ~miss
    k = col.size - n_miss
    if k < 2:
        return None

    vals = col[present]
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    sg = grad[present][order]
    sh = hess[present][order]
    cg = np.cumsum(sg)
    ch = np.cumsum(sh)

    cut = np.nonzero(sv[:-1] < sv[1:])[0]
    if cut.size == 0:
        return None
    thresholds = (sv[cut] + sv[cut + 1]) / 2.0

    g_miss = float(grad[miss].sum())
    h_miss = float(hess[miss].sum())
    g_all = float(cg[-1]) + g_miss
    h_all = float(ch[-1]) + h_miss
    parent = g_all * g_all / (h_all + l2)

    gl_base = cg[cut]
    hl_base = ch[cut]
    nl_base = cut + 1
    gr_base = cg[-1] - gl_base
    hr_base = ch[-1] - hl_base
    nr_base = k - nl_base

    def side_gain(gl, hl, gr, hr):
        return gl * gl / (hl + l2) + gr * gr / (hr + l2) - parent

    gain_left = side_gain(gl_base + g_miss, hl_base + h_miss, gr_base, hr_base)
    gain_right = side_gain(gl_base, hl_base, gr_base + g_miss, hr_base + h_miss)
    ok_left = (nl_base + n_miss >= min_leaf) & (nr_base >= min_leaf)
    ok_right = (nl_base >= min_leaf) & (nr_base + n_miss >= min_leaf)

    gain_left = np.where(ok_left, gain_left, -np.inf)
    gain_right = np.where(ok_right, gain_right, -np.inf)
    use_right = gain_right > gain_left
    gains = np.where(use_right, gain_right, gain_left)

    best = int(np.argmax(gains))
    if not math.isfinite(gains[best]):
        return None
    return float(gains[best]), float(thresholds[best]), not bool(use_right[best])


def fit_tree(
    X: np.ndarray,
    residuals: np.ndarray,
    hessians: np.ndarray,
    config: TreeConfig,
    *,
    feature_indices: np.ndarray | None = None,
    rng: np.random.Generator | None = None,
    max_features_per_split: int | None = None,
) -> TreeNode:
    """Grow one tree: exact greedy splits maximizing the second-order gain.

    `residuals` are target-minus-prediction; internally the gradient is its
    negation so leaf weights come out as -G/(H+l2). `feature_indices` limits
    the columns the whole tree may use; `max_features_per_split` (with `rng`)
    additionally samples a random subset at every node.
    """
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ConfigurationError("X must be a 2-D matrix")
    n, d = X.shape
    if n < 2 * config.min_samples_leaf:
        raise ConfigurationError(
            f"need at least 2*min_samples_leaf={2 * config.min_samples_leaf} rows, got {n}"
        )
    grad = -np.asarray(residuals, dtype=np.float64)
    hess = np.asarray(hessians, dtype=np.float64)
    if grad.shape != (n,) or hess.shape != (n,):
        raise ConfigurationError("residuals/hessians must match the row count of X")

    allowed = np.arange(d) if feature_indices is None else np.sort(np.asarray(feature_indices))

    def grow(Xn: np.ndarray, gn: np.ndarray, hn: np.ndarray, depth: int) -> TreeNode:
        g_sum = float(gn.sum())
        h_sum = float(hn.sum())
        leaf = TreeNode(weight=-g_sum / (h_sum + config.l2_penalty))
        if depth >= config.max_depth or gn.size < 2 * config.min_samples_leaf:
            return leaf

        feats = allowed
        if max_features_per_split is not None and max_features_per_split < feats.size:
            if rng is None:
                raise ConfigurationError("max_features_per_split requires an rng")
            feats = np.sort(rng.choice(feats, size=max_features_per_split, replace=False))

        best_gain = 0.0
        best: tuple[int, float, bool] | None = None
        for f in feats:
            found = _best_split_for_feature(
                Xn[:, f], gn, hn, config.l2_penalty, config.min_samples_leaf
            )
            if found is not None and found[0] > best_gain:
                best_gain, thr, missing_left = found
                best = (int(f), thr, missing_left)
        if best is None:
            return leaf

        f, thr, missing_left = best
        col = Xn[:, f]
        go_left = col < thr
        if missing_left:
            go_left |= np.isnan(col)
        node = TreeNode(feature=f, threshold=thr, missing_left=missing_left, gain=best_gain)
        node.left = grow(Xn[go_left], gn[go_left], hn[go_left], depth + 1)
        node.right = grow(Xn[~go_left], gn[~go_left], hn[~go_left], depth + 1)
        return node

    return grow(X, grad, hess, 0)


def tree_predict(node: TreeNode, X: np.ndarray) -> np.ndarray:
    """Vector of leaf weights for every row of X (NaN = missing)."""
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=np.float64)
    idx_all = np.arange(X.shape[0])

    def walk(nd: TreeNode, idx: np.ndarray) -> None:
        if nd.is_leaf:
            out[idx] = nd.weight
            return
        col = X[idx, nd.feature]
        go_left = col < nd.threshold
        if nd.missing_left:
            go_left |= np.isnan(col)
        walk(nd.left, idx[go_left])
        walk(nd.right, idx[~go_left])

    walk(node, idx_all)
    return out
