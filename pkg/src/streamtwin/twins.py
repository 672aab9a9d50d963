"""Per-user twin models and the sensitivity vectors distilled from them."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, SchemaError
from .learner.boosting import GBDTConfig, TreeEnsemble, fit_gbdt, predict_matrix
from .learner.importance import gain_importance
from .learner.search import SearchSpace, halving_search
from .learner.stats import mae
from .pipeline.features import SessionRecord, records_to_matrix
from .pipeline.selection import FeatureCatalog, UserSplit

__all__ = [
    "DEFAULT_TWIN_SPACE",
    "TwinEntry",
    "SensitivityVector",
    "train_twin",
    "train_twins",
    "extract_sensitivities",
    "store_sensitivities",
    "load_sensitivities",
]

DEFAULT_TWIN_SPACE = SearchSpace(
    {
        "n_trees": [25, 50],
        "max_depth": [2, 3],
        "learning_rate": [0.1, 0.3],
    }
)

MIN_TRAIN_SESSIONS = 80


@dataclass
class TwinEntry:
    user_id: str
    model: TreeEnsemble
    config: dict[str, object] | None
    train_mae: float
    test_mae: float | None
    n_train: int
    n_test: int
    degenerate: bool


@dataclass(frozen=True)
class SensitivityVector:
    user_id: str
    weights: dict[str, float]
    degenerate: bool


def train_twin(
    records: Sequence[SessionRecord],
    split: UserSplit,
    catalog: FeatureCatalog,
    seed: int,
    space: SearchSpace = DEFAULT_TWIN_SPACE,
) -> TwinEntry:
    """Search, refit, and score one user's twin on that user's own sessions.

    A constant engagement target short-circuits to a base-score-only model
    flagged degenerate (there is nothing to attribute sensitivity to).
    """
    by_session = {r.session_id: r for r in records if r.user_id == split.user_id}
    missing = [sid for sid in (*split.train, *split.test) if sid not in by_session]
    if missing:
        raise SchemaError(
            f"split for {split.user_id} references unknown session(s), e.g. {missing[0]!r}"
        )
    train_records = [by_session[sid] for sid in split.train]
    test_records = [by_session[sid] for sid in split.test]
    if len(train_records) < MIN_TRAIN_SESSIONS:
        raise ConfigurationError(
            f"user {split.user_id} has {len(train_records)} train sessions, "
            f"need at least {MIN_TRAIN_SESSIONS}"
        )

    features = catalog.selected_names
    X_train, y_train = records_to_matrix(train_records, features)
    X_test, y_test = records_to_matrix(test_records, features)

    if np.all(y_train == y_train[0]):
        model = fit_gbdt(
            X_train, y_train, GBDTConfig(n_trees=0), np.random.SeedSequence([seed, 0]), features
        )
        return TwinEntry(
            user_id=split.user_id,
            model=model,
            config=None,
            train_mae=mae(y_train, predict_matrix(model, X_train)),
            test_mae=mae(y_test, predict_matrix(model, X_test)) if len(test_records) else None,
            n_train=len(train_records),
            n_test=len(test_records),
            degenerate=True,
        )

    folds = 3
    min_fraction = max(0.125, (folds * 5) / len(train_records))
    best, _ = halving_search(
        X_train, y_train, space, seed, folds=folds, min_fraction=min_fraction
    )
    model = fit_gbdt(
        X_train, y_train, GBDTConfig(**best), np.random.SeedSequence([seed, 1]), features
    )
    return TwinEntry(
        user_id=split.user_id,
        model=model,
        config=dict(best),
        train_mae=mae(y_train, predict_matrix(model, X_train)),
        test_mae=mae(y_test, predict_matrix(model, X_test)) if len(test_records) else None,
        n_train=len(train_records),
        n_test=len(test_records),
        degenerate=False,
    )


def extract_sensitivities(entry: TwinEntry) -> SensitivityVector:
    """Normalized gain importance; splitless twins fall back to uniform weights."""
    features = entry.model.feature_names
    weights = gain_importance(entry.model)
    total = sum(weights.values())
    if entry.degenerate or total <= 0.0:
        uniform = 1.0 / len(features)
        return SensitivityVector(
            user_id=entry.user_id,
            weights={name: uniform for name in features},
            degenerate=True,
        )
    return SensitivityVector(user_id=entry.user_id, weights=weights, degenerate=False)


def train_twins(
    records: Sequence[SessionRecord],
    splits: Sequence[UserSplit],
    catalog: FeatureCatalog,
    seed: int,
    space: SearchSpace = DEFAULT_TWIN_SPACE,
) -> tuple[list[TwinEntry], list[SensitivityVector]]:
    """All users' twins, each trained with a seed derived from its position."""
    by_user: dict[str, list[SessionRecord]] = {}
    for record in records:
        by_user.setdefault(record.user_id, []).append(record)
    entries: list[TwinEntry] = []
    vectors: list[SensitivityVector] = []
    for i, split in enumerate(splits):
        entry = train_twin(
            by_user.get(split.user_id, []), split, catalog, seed * 100_003 + i, space
        )
        entries.append(entry)
        vectors.append(extract_sensitivities(entry))
    return entries, vectors


def store_sensitivities(
    vectors: Sequence[SensitivityVector],
    feature_names: Sequence[str],
    target: str | Path | IO[str],
) -> None:
    """CSV: user_id, one column per feature (repr-exact), trailing degenerate flag."""
    if hasattr(target, "write"):
        _write_db(vectors, feature_names, target)  # type: ignore[arg-type]
        return
    with open(target, "w", newline="") as handle:
        _write_db(vectors, feature_names, handle)


def _write_db(
    vectors: Sequence[SensitivityVector], feature_names: Sequence[str], handle: IO[str]
) -> None:
    writer = csv.writer(handle)
    writer.writerow(["user_id", *feature_names, "degenerate"])
    for vector in vectors:
        extra = set(vector.weights) - set(feature_names)
        if extra:
            raise SchemaError(
                f"sensitivity vector for {vector.user_id} has unknown feature(s): {sorted(extra)}"
            )
        writer.writerow(
            [
                vector.user_id,
                *(repr(vector.weights.get(name, 0.0)) for name in feature_names),
                int(vector.degenerate),
            ]
        )


def load_sensitivities(
    source: str | Path | IO[str], catalog: FeatureCatalog | None = None
) -> tuple[list[SensitivityVector], list[str]]:
    """(vectors, feature column names); validates columns against the catalog."""
    if hasattr(source, "read"):
        return _read_db(source, catalog)  # type: ignore[arg-type]
    with open(source, "r", newline="") as handle:
        return _read_db(handle, catalog)


def _read_db(
    handle: IO[str], catalog: FeatureCatalog | None
) -> tuple[list[SensitivityVector], list[str]]:
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError("sensitivity store is empty") from None
    if not header or header[0] != "user_id":
        raise SchemaError("sensitivity store must start with a user_id column")
    has_flag = header[-1] == "degenerate"
    feature_names = header[1 : -1 if has_flag else None]
    if catalog is not None:
        expected = catalog.selected_names
        if feature_names != expected:
            missing = [n for n in expected if n not in feature_names]
            extra = [n for n in feature_names if n not in expected]
            raise SchemaError(
                f"sensitivity columns do not match the catalog; missing={missing} extra={extra}"
            )
    vectors = []
    for row in reader:
        if not row:
            continue
        weights = {name: float(raw) for name, raw in zip(feature_names, row[1:])}
        degenerate = bool(int(row[-1])) if has_flag else False
        vectors.append(SensitivityVector(user_id=row[0], weights=weights, degenerate=degenerate))
    return vectors, feature_names
