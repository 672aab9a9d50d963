"""Plain-array statistics: correlations and regression error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError

__all__ = ["Metrics", "mae", "rmse", "pearson", "spearman", "midranks", "metrics"]


def mae(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return float(np.mean(np.abs(np.asarray(y_pred, float) - np.asarray(y_true, float))))


def rmse(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    diff = np.asarray(y_pred, float) - np.asarray(y_true, float)
    return float(np.sqrt(np.mean(diff * diff)))


def pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    """Pearson correlation; None when either side has zero variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size != b.size:
        raise ConfigurationError("correlation inputs must have equal length")
    if a.size < 2:
        return None
    da = a - a.mean()
    db = b - b.mean()
    denom = float(np.sqrt((da * da).sum() * (db * db).sum()))
    if denom == 0.0:
        return None
    return float((da * db).sum() / denom)


def midranks(values: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned the mean of the ranks they span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    sorted_vals = values[order]
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(a: np.ndarray, b: np.ndarray) -> float | None:
    """Rank correlation with average-rank ties; None on zero rank variance."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size != b.size:
        raise ConfigurationError("correlation inputs must have equal length")
    if a.size < 2:
        return None
    return pearson(midranks(a), midranks(b))


@dataclass(frozen=True)
class Metrics:
    mae: float
    rmse: float
    pearson: float | None
    spearman: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {"mae": self.mae, "rmse": self.rmse, "pearson": self.pearson, "spearman": self.spearman}


def metrics(y_true: np.ndarray, y_pred: np.ndarray) -> Metrics:
    return Metrics(
        mae=mae(y_true, y_pred),
        rmse=rmse(y_true, y_pred),
        pearson=pearson(y_true, y_pred),
        spearman=spearman(y_true, y_pred),
    )
