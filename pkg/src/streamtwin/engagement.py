"""Population-level engagement model over sensitivity-augmented session rows."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, DroppableSession, SchemaError
from .events import RawEvent, SessionKey
from .learner.boosting import GBDTConfig, TreeEnsemble, fit_gbdt
from .learner.search import SearchSpace, halving_search
from .learner.stats import pearson
from .pipeline.features import (
    SessionRecord,
    build_popularity_index,
    compress,
    compute_engagement,
    engineer,
)
from .pipeline.selection import FeatureCatalog, UserSplit
from .twins import SensitivityVector
from .util import engagement_bin

__all__ = [
    "SENS_PREFIX",
    "DEFAULT_UNIFIED_SPACE",
    "MIN_UNIFIED_ROWS",
    "HORIZON_GRID",
    "Dataset",
    "augmented_feature_names",
    "concatenate",
    "build_dataset",
    "train_engagement_model",
    "train_unified",
    "train_benchmark",
    "horizon_seconds",
    "horizon_label",
    "truncate_session",
    "truncate_horizon",
    "bin10_accuracy",
    "binary_at_threshold",
    "quit50_pcc",
]

SENS_PREFIX = "sens_"
MIN_UNIFIED_ROWS = 200

DEFAULT_UNIFIED_SPACE = SearchSpace(
    {
        "n_trees": [50, 100],
        "max_depth": [2, 3],
        "learning_rate": [0.1, 0.3],
    }
)

HORIZON_GRID = ("10s", "30s", "1m", "2m", "3m", "5m", "7m", "10m", "full")


@dataclass
class Dataset:
    """Aligned augmented/base matrices for one train or test slice.

    Rows follow split order, so the augmented and base routes score on
    byte-identical session sequences.
    """

    base_names: list[str]
    augmented_names: list[str]
    X_augmented: np.ndarray
    X_base: np.ndarray
    y: np.ndarray
    user_ids: list[str]
    session_ids: list[str]


def augmented_feature_names(catalog: FeatureCatalog) -> list[str]:
    names = catalog.selected_names
    return [*names, *(SENS_PREFIX + name for name in names)]


def concatenate(
    records: Sequence[SessionRecord],
    vectors: Sequence[SensitivityVector],
    catalog: FeatureCatalog,
) -> Dataset:
    """Join session rows with their owner's sensitivity weights.

    The weight columns stand in for any user identity: the augmented matrix
    carries no identifier columns, only the selected features plus the
    prefixed weights. Row order follows `records` exactly, so the augmented
    and base routes always see identical session sequences.
    """
    base_names = catalog.selected_names
    by_user = {v.user_id: v for v in vectors}
    missing = sorted({r.user_id for r in records if r.user_id not in by_user})
    if missing:
        raise SchemaError(f"records reference user(s) with no sensitivity vector: {missing}")

    rows_aug: list[list[float]] = []
    rows_base: list[list[float]] = []
    y: list[float] = []
    user_ids: list[str] = []
    session_ids: list[str] = []
    for record in records:
        weights = [by_user[record.user_id].weights.get(name, 0.0) for name in base_names]
        base = [
            float(v) if (v := getattr(record, name)) is not None else np.nan
            for name in base_names
        ]
        rows_base.append(base)
        rows_aug.append([*base, *weights])
        y.append(record.engagement)
        user_ids.append(record.user_id)
        session_ids.append(record.session_id)

    n_base = len(base_names)
    return Dataset(
        base_names=list(base_names),
        augmented_names=augmented_feature_names(catalog),
        X_augmented=np.asarray(rows_aug, dtype=np.float64).reshape(len(y), 2 * n_base),
        X_base=np.asarray(rows_base, dtype=np.float64).reshape(len(y), n_base),
        y=np.asarray(y, dtype=np.float64),
        user_ids=user_ids,
        session_ids=session_ids,
    )


def build_dataset(
    records: Sequence[SessionRecord],
    splits: Sequence[UserSplit],
    vectors: Sequence[SensitivityVector],
    catalog: FeatureCatalog,
    subset: str = "train",
) -> Dataset:
    """Augmented rows for one split side, in split order."""
    if subset not in ("train", "test"):
        raise ConfigurationError(f"subset must be 'train' or 'test', got {subset!r}")
    by_key = {(r.user_id, r.session_id): r for r in records}
    chosen: list[SessionRecord] = []
    for split in splits:
        for session_id in getattr(split, subset):
            record = by_key.get((split.user_id, session_id))
            if record is None:
                raise SchemaError(
                    f"split references unknown session {session_id!r} of user {split.user_id}"
                )
            chosen.append(record)
    return concatenate(chosen, vectors, catalog)


def train_engagement_model(
    X: np.ndarray,
    y: np.ndarray,
    feature_names: Sequence[str],
    seed: int,
    space: SearchSpace = DEFAULT_UNIFIED_SPACE,
    folds: int = 3,
) -> tuple[TreeEnsemble, dict[str, object], list[dict[str, object]]]:
    """Halving search then a full refit; returns (model, config, leaderboard)."""
    if len(y) < MIN_UNIFIED_ROWS:
        raise ConfigurationError(
            f"engagement model needs at least {MIN_UNIFIED_ROWS} rows, got {len(y)}"
        )
    min_fraction = max(0.125, (folds * 5) / len(y))
    best, leaderboard = halving_search(X, y, space, seed, folds=folds, min_fraction=min_fraction)
    model = fit_gbdt(X, y, GBDTConfig(**best), np.random.SeedSequence([seed, 2]), feature_names)
    return model, dict(best), leaderboard


def train_unified(
    dataset: Dataset,
    seed: int,
    space: SearchSpace = DEFAULT_UNIFIED_SPACE,
    folds: int = 3,
) -> tuple[TreeEnsemble, dict[str, object], list[dict[str, object]]]:
    """Population model over features + sensitivity weight columns."""
    return train_engagement_model(
        dataset.X_augmented, dataset.y, dataset.augmented_names, seed, space, folds
    )


def train_benchmark(
    dataset: Dataset,
    seed: int,
    space: SearchSpace = DEFAULT_UNIFIED_SPACE,
    folds: int = 3,
) -> tuple[TreeEnsemble, dict[str, object], list[dict[str, object]]]:
    """Same rows, same order, weight columns dropped — the comparison arm."""
    return train_engagement_model(
        dataset.X_base, dataset.y, dataset.base_names, seed, space, folds
    )


_HORIZON_RE = re.compile(r"(\d+(?:\.\d+)?)(s|m|h)")


def horizon_seconds(label: str) -> float | None:
    """'10s' -> 10.0, '2m' -> 120.0, 'full' -> None (no truncation)."""
    text = label.strip().lower()
    if text in ("full", "inf", "none", ""):
        return None
    match = _HORIZON_RE.fullmatch(text)
    if not match:
        raise ConfigurationError(
            f"unrecognized horizon {label!r}; use forms like '10s', '2m', '1h', or 'full'"
        )
    return float(match.group(1)) * {"s": 1.0, "m": 60.0, "h": 3600.0}[match.group(2)]


def horizon_label(seconds: float | None) -> str:
    if seconds is None:
        return "full"
    if seconds % 3600 == 0 and seconds >= 3600:
        return f"{int(seconds // 3600)}h"
    if seconds % 60 == 0 and seconds >= 60:
        return f"{int(seconds // 60)}m"
    return f"{seconds:g}s"


def truncate_session(events: Sequence[RawEvent], horizon_s: float | None) -> list[RawEvent]:
    """Events whose offset from the session's first event is within the horizon."""
    if horizon_s is None:
        return list(events)
    if not events:
        return []
    start = events[0].client_time
    limit = horizon_s * 1000.0
    return [e for e in events if e.client_time - start <= limit]


def truncate_horizon(
    sessions: Mapping[SessionKey, Sequence[RawEvent]],
    horizon_s: float | None,
    popularity_index: Mapping[str, float] | None = None,
) -> tuple[list[SessionRecord], int]:
    """Recompress every session from only its first `horizon_s` seconds.

    Features describe the truncated view; the engagement label always comes
    from the full session. Returns (records, sessions dropped because no
    usable view or label survived).
    """
    if popularity_index is None:
        popularity_index = build_popularity_index(sessions)
    labels: dict[SessionKey, float] = {}
    truncated: dict[SessionKey, list[RawEvent]] = {}
    dropped = 0
    for key in sorted(sessions):
        events = sessions[key]
        kept = truncate_session(events, horizon_s)
        if not kept:
            dropped += 1
            continue
        try:
            labels[key] = compute_engagement(events)
        except DroppableSession:
            dropped += 1
            continue
        truncated[key] = kept
    enriched = engineer(truncated, popularity_index)
    records = [
        compress(key, enriched[key], engagement_override=labels[key]) for key in sorted(truncated)
    ]
    return records, dropped


def _clamped(y_pred: Sequence[float]) -> np.ndarray:
    return np.clip(np.asarray(y_pred, dtype=np.float64), 0.0, 1.0)


def bin10_accuracy(y_true: Sequence[float], y_pred: Sequence[float]) -> float:
    """Share of sessions whose predicted engagement lands in the true decile bin."""
    t = np.asarray(y_true, dtype=np.float64)
    p = _clamped(y_pred)
    hits = sum(engagement_bin(a) == engagement_bin(b) for a, b in zip(t, p))
    return hits / len(t)


def binary_at_threshold(
    y_true: Sequence[float], y_pred: Sequence[float], threshold: float = 0.7
) -> float:
    """Accuracy of the finished-vs-abandoned call at the given engagement cut."""
    t = np.asarray(y_true, dtype=np.float64) >= threshold
    p = _clamped(y_pred) >= threshold
    return float(np.mean(t == p))


def quit50_pcc(
    video_ids: Sequence[str],
    y_true: Sequence[float],
    y_pred: Sequence[float],
    min_sessions: int = 10,
) -> float | None:
    """Correlation of true vs predicted per-video early-quit rates.

    A session is an early quit when engagement < 0.5. Only videos with at
    least `min_sessions` sessions participate; None when fewer than 3 such
    videos exist or the correlation is undefined.
    """
    t = np.asarray(y_true, dtype=np.float64)
    p = _clamped(y_pred)
    groups: dict[str, list[int]] = {}
    for i, video in enumerate(video_ids):
        groups.setdefault(video, []).append(i)
    true_rates: list[float] = []
    pred_rates: list[float] = []
    for video in sorted(groups):
        idx = groups[video]
        if len(idx) < min_sessions:
            continue
        true_rates.append(float(np.mean(t[idx] < 0.5)))
        pred_rates.append(float(np.mean(p[idx] < 0.5)))
    if len(true_rates) < 3:
        return None
    return pearson(true_rates, pred_rates)
