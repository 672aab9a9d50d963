"""Engagement balancing, per-user splits, and correlation-penalized feature selection."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError, SchemaError
from ..learner.forest import ForestConfig, fit_random_forest
from ..learner.importance import gain_importance
from ..learner.stats import spearman
from ..util import engagement_bin, rng_from
from .features import RECORD_FIELDS, SessionRecord, records_to_matrix

__all__ = [
    "CANDIDATE_FEATURES",
    "FeatureScore",
    "FeatureCatalog",
    "UserSplit",
    "balance_and_split",
    "select_features",
    "save_catalog",
    "load_catalog",
    "save_splits",
    "load_splits",
]

# Identifier columns never enter the model. play_time is excluded alongside
# the engagement label itself: played seconds over video duration IS the
# label, and in what-if scoring every simulated session plays to the end,
# which would pin that column to the duration and blind the model.
_EXCLUDED_FIELDS = ("user_id", "session_id", "engagement", "play_time")
CANDIDATE_FEATURES: tuple[str, ...] = tuple(
    name for name in RECORD_FIELDS if name not in _EXCLUDED_FIELDS
)


@dataclass(frozen=True)
class FeatureScore:
    name: str
    raw_importance: float
    correlation_penalty: float
    penalized_importance: float
    selected: bool


@dataclass(frozen=True)
class FeatureCatalog:
    threshold: float
    features: tuple[FeatureScore, ...]

    @property
    def selected_names(self) -> list[str]:
        return [f.name for f in self.features if f.selected]

    def as_dict(self) -> dict[str, object]:
        return {
            "schema": "feature-catalog/v1",
            "threshold": self.threshold,
            "features": [
                {
                    "name": f.name,
                    "raw_importance": f.raw_importance,
                    "correlation_penalty": f.correlation_penalty,
                    "penalized_importance": f.penalized_importance,
                    "selected": f.selected,
                }
                for f in self.features
            ],
        }


@dataclass(frozen=True)
class UserSplit:
    user_id: str
    train: tuple[str, ...]
    test: tuple[str, ...]


def balance_and_split(
    records: Sequence[SessionRecord],
    seed: int,
    *,
    n_bins: int = 10,
    min_user_sessions: int = 100,
    test_fraction: float = 0.2,
) -> tuple[list[SessionRecord], list[UserSplit]]:
    """Equalize the 10 engagement bins, drop thin users, split 80/20 per user.

    Every bin is downsampled (seeded, order-preserving) to the smallest bin's
    size; an empty bin is a configuration error. Users left with fewer than
    `min_user_sessions` records are dropped entirely. Each surviving user's
    sessions are shuffled and split with floor(n * test_fraction) test rows.
    """
    bins: dict[int, list[int]] = {b: [] for b in range(n_bins)}
    for i, record in enumerate(records):
        bins[engagement_bin(record.engagement, n_bins)].append(i)
    empty = [b for b, idx in bins.items() if not idx]
    if empty:
        raise ConfigurationError(
            f"engagement bin(s) {empty} are empty; balancing needs every bin populated"
        )

    target = min(len(idx) for idx in bins.values())
    rng = rng_from(seed, 0xBA1)
    keep: list[int] = []
    for b in range(n_bins):
        idx = bins[b]
        if len(idx) > target:
            chosen = rng.choice(len(idx), size=target, replace=False)
            keep.extend(idx[i] for i in sorted(chosen))
        else:
            keep.extend(idx)
    keep.sort()
    balanced = [records[i] for i in keep]

    by_user: dict[str, list[SessionRecord]] = {}
    for record in balanced:
        by_user.setdefault(record.user_id, []).append(record)
    survivors = {u: recs for u, recs in by_user.items() if len(recs) >= min_user_sessions}
    balanced = [r for r in balanced if r.user_id in survivors]

    splits: list[UserSplit] = []
    for user in sorted(survivors):
        session_ids = [r.session_id for r in survivors[user]]
        order = rng.permutation(len(session_ids))
        n_test = int(len(session_ids) * test_fraction)
        test = tuple(session_ids[i] for i in order[:n_test])
        train = tuple(session_ids[i] for i in order[n_test:])
        splits.append(UserSplit(user_id=user, train=train, test=test))
    return balanced, splits


def _pairwise_spearman_penalty(X: np.ndarray) -> np.ndarray:
    """penalty(f) = 1 (self) + sum over g != f of |spearman(f, g)|.

    Pairs are computed over rows where both columns are present; undefined
    correlations (constant column, fewer than 3 shared rows) contribute 0.
    """
    d = X.shape[1]
    penalty = np.ones(d)
    for a in range(d):
        for b in range(a + 1, d):
            both = ~np.isnan(X[:, a]) & ~np.isnan(X[:, b])
            if both.sum() < 3:
                continue
            rho = spearman(X[both, a], X[both, b])
            if rho is not None:
                penalty[a] += abs(rho)
                penalty[b] += abs(rho)
    return penalty


def select_features(
    records: Sequence[SessionRecord],
    threshold: float,
    seed: int,
    *,
    forest: ForestConfig | None = None,
    candidates: Sequence[str] = CANDIDATE_FEATURES,
) -> FeatureCatalog:
    """Forest importance divided by redundancy, renormalized, cut at `threshold`."""
    if threshold < 0:
        raise ConfigurationError(f"threshold must be >= 0, got {threshold}")
    if not records:
        raise ConfigurationError("cannot select features from an empty corpus")
    X, y = records_to_matrix(records, candidates)
    model = fit_random_forest(
        X, y, forest or ForestConfig(), np.random.SeedSequence([seed, 0x5E1]), list(candidates)
    )
    raw = gain_importance(model)
    penalty = _pairwise_spearman_penalty(X)
    adjusted = np.array([raw[name] for name in candidates]) / penalty
    total = adjusted.sum()
    if total <= 0:
        raise ConfigurationError("no feature carries any importance; corpus is degenerate")
    adjusted = adjusted / total

    scores = tuple(
        FeatureScore(
            name=name,
            raw_importance=raw[name],
            correlation_penalty=float(penalty[j]),
            penalized_importance=float(adjusted[j]),
            selected=bool(adjusted[j] >= threshold),
        )
        for j, name in enumerate(candidates)
    )
    if not any(s.selected for s in scores):
        raise ConfigurationError(
            f"threshold {threshold} selects no features (max penalized importance "
            f"is {float(adjusted.max()):.6f})"
        )
    return FeatureCatalog(threshold=threshold, features=scores)


def save_catalog(catalog: FeatureCatalog, path: str | Path) -> None:
    Path(path).write_text(json.dumps(catalog.as_dict(), indent=2))


def load_catalog(path: str | Path) -> FeatureCatalog:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != "feature-catalog/v1":
        raise SchemaError(f"not a feature catalog: schema={data.get('schema')!r}")
    return FeatureCatalog(
        threshold=float(data["threshold"]),
        features=tuple(
            FeatureScore(
                name=f["name"],
                raw_importance=float(f["raw_importance"]),
                correlation_penalty=float(f["correlation_penalty"]),
                penalized_importance=float(f["penalized_importance"]),
                selected=bool(f["selected"]),
            )
            for f in data["features"]
        ),
    )


def save_splits(splits: Sequence[UserSplit], seed: int, path: str | Path) -> None:
    payload = {
        "schema": "user-splits/v1",
        "seed": seed,
        "users": [
            {"user_id": s.user_id, "train": list(s.train), "test": list(s.test)}
            for s in splits
        ],
    }
    Path(path).write_text(json.dumps(payload, indent=2))


def load_splits(path: str | Path) -> list[UserSplit]:
    data = json.loads(Path(path).read_text())
    if data.get("schema") != "user-splits/v1":
        raise SchemaError(f"not a splits file: schema={data.get('schema')!r}")
    return [
        UserSplit(user_id=u["user_id"], train=tuple(u["train"]), test=tuple(u["test"]))
        for u in data["users"]
    ]
