"""Successive-halving hyperparameter search over the boosted-tree config."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Mapping, Sequence

import numpy as np

from ..errors import ConfigurationError
from .boosting import GBDTConfig, fit_gbdt, predict_matrix

__all__ = ["SearchSpace", "halving_search"]


@dataclass(frozen=True)
class SearchSpace:
    """Per-hyperparameter candidate values; the grid is their product."""

    grid: Mapping[str, Sequence[Any]]

    def candidates(self) -> list[dict[str, Any]]:
        """Product enumerated lexicographically: sorted names, listed value order."""
        names = sorted(self.grid)
        for name in names:
            if not self.grid[name]:
                raise ConfigurationError(f"empty candidate list for {name!r}")
        combos = itertools.product(*(self.grid[name] for name in names))
        return [dict(zip(names, combo)) for combo in combos]


def _cv_mae(
    X: np.ndarray,
    y: np.ndarray,
    rows: np.ndarray,
    config: dict[str, Any],
    folds: int,
    seed: int,
    rung: int,
    cand: int,
) -> float:
    cfg = GBDTConfig(**config)
    bounds = np.linspace(0, rows.size, folds + 1).astype(int)
    errors = []
    for k in range(folds):
        held = rows[bounds[k] : bounds[k + 1]]
        train = np.concatenate([rows[: bounds[k]], rows[bounds[k + 1] :]])
        model = fit_gbdt(
            X[train], y[train], cfg, np.random.SeedSequence([seed, rung, cand, k])
        )
        pred = predict_matrix(model, X[held])
        errors.append(float(np.mean(np.abs(pred - y[held]))))
    return float(np.mean(errors))


def halving_search(
    X: np.ndarray,
    y: np.ndarray,
    space: SearchSpace,
    seed: int,
    *,
    folds: int = 3,
    factor: int = 2,
    min_fraction: float = 0.125,
) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """Race the full config grid on growing data slices; return (winner, leaderboard).

    Rung 0 cross-validates every candidate on a seeded `min_fraction` slice of
    the rows; each rung keeps the best ceil(k/factor) configs by mean CV MAE
    (ties broken by candidate enumeration order) and multiplies the slice by
    `factor`, capped at the full data, until one config remains.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if factor < 2:
        raise ConfigurationError(f"factor must be >= 2, got {factor}")
    if folds < 2:
        raise ConfigurationError(f"folds must be >= 2, got {folds}")
    if not 0.0 < min_fraction <= 1.0:
        raise ConfigurationError(f"min_fraction must be in (0, 1], got {min_fraction}")
    # Validate the integer slice the first rung will actually use: comparing
    # min_fraction * n directly misfires when min_fraction was derived as
    # rows_wanted / n and the product rounds a hair below the target.
    start_rows = max(1, math.ceil(min_fraction * n))
    if start_rows < folds * 5:
        raise ConfigurationError(
            f"starting slice too small: ceil(min_fraction*rows) = {start_rows} "
            f"< folds*5 = {folds * 5}"
        )

    candidates = space.candidates()
    if len(candidates) == 1:
        return candidates[0], []

    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, 0x5A1])))
    perm = rng.permutation(n)

    alive = list(range(len(candidates)))
    leaderboard: list[dict[str, Any]] = []
    fraction = min_fraction
    rung = 0
    while len(alive) > 1:
        rows = perm[: max(1, math.ceil(fraction * n))]
        scored = [
            (idx, _cv_mae(X, y, rows, candidates[idx], folds, seed, rung, idx))
            for idx in alive
        ]
        scored.sort(key=lambda item: (item[1], item[0]))
        keep = math.ceil(len(alive) / factor)
        alive = [idx for idx, _ in scored[:keep]]
        leaderboard.append(
            {
                "rung": rung,
                "data_fraction": fraction,
                "n_rows": int(rows.size),
                "results": [
                    {"config": candidates[idx], "mean_mae": score} for idx, score in scored
                ],
                "survivors": [candidates[idx] for idx in alive],
            }
        )
        fraction = min(1.0, fraction * factor)
        rung += 1
    return candidates[alive[0]], leaderboard
