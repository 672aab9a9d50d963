"""End-to-end orchestration: clean, featurize, split, select, train, evaluate."""

from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .engagement import (
    DEFAULT_UNIFIED_SPACE,
    Dataset,
    bin10_accuracy,
    binary_at_threshold,
    build_dataset,
    quit50_pcc,
    train_benchmark,
    train_unified,
    truncate_horizon,
    horizon_seconds,
)
from .errors import ConfigurationError, DroppableSession
from .events import RawEvent, SessionKey
from .learner.boosting import TreeEnsemble, predict_matrix
from .learner.search import SearchSpace
from .learner.stats import metrics
from .pipeline.cleaning import CleanConfig, CleanReport, clean
from .pipeline.features import (
    SessionRecord,
    build_popularity_index,
    compress,
    engineer,
)
from .pipeline.selection import (
    FeatureCatalog,
    UserSplit,
    balance_and_split,
    select_features,
)
from .twins import (
    DEFAULT_TWIN_SPACE,
    SensitivityVector,
    TwinEntry,
    train_twins,
)

__all__ = [
    "REPORT_SCHEMA",
    "ProcessedData",
    "TrainedModels",
    "process",
    "train_all",
    "evaluate_horizons",
    "threshold_sweep",
    "full_run",
    "write_plot_data",
]

REPORT_SCHEMA = "eval-report/v1"


@dataclass
class ProcessedData:
    """Everything the training stages need, derived once from raw sessions."""

    sessions: dict[SessionKey, list[RawEvent]]
    clean_report: CleanReport
    records: list[SessionRecord]
    splits: list[UserSplit]
    catalog: FeatureCatalog
    popularity_index: dict[str, float]
    n_unlabelable: int

    def train_records(self) -> list[SessionRecord]:
        by_key = {(r.user_id, r.session_id): r for r in self.records}
        return [
            by_key[(split.user_id, sid)] for split in self.splits for sid in split.train
        ]

    def balanced_sessions(self) -> dict[SessionKey, list[RawEvent]]:
        keys = {SessionKey(r.user_id, r.session_id) for r in self.records}
        return {key: events for key, events in self.sessions.items() if key in keys}

    def video_of(self) -> dict[SessionKey, str]:
        return {
            key: events[0].video_id
            for key, events in self.sessions.items()
            if events
        }


@dataclass
class TrainedModels:
    twins: list[TwinEntry]
    vectors: list[SensitivityVector]
    train_dataset: Dataset
    test_dataset: Dataset
    unified: TreeEnsemble
    unified_config: dict[str, object]
    benchmark: TreeEnsemble
    benchmark_config: dict[str, object]


def _derived_seed(seed: int, *tags: int) -> int:
    return int(np.random.SeedSequence([seed, *tags]).generate_state(1)[0])


def process(
    sessions: Mapping[SessionKey, Sequence[RawEvent]],
    *,
    seed: int,
    threshold: float,
    clean_config: CleanConfig | None = None,
) -> ProcessedData:
    """Clean, compress, balance/split, and select features (train side only)."""
    cleaned, clean_report = clean(sessions, clean_config)
    popularity = build_popularity_index(cleaned)
    enriched = engineer(cleaned, popularity)
    records: list[SessionRecord] = []
    n_unlabelable = 0
    for key in sorted(cleaned):
        try:
            records.append(compress(key, enriched[key]))
        except DroppableSession:
            n_unlabelable += 1
    balanced, splits = balance_and_split(records, seed)
    by_key = {(r.user_id, r.session_id): r for r in balanced}
    train_records = [
        by_key[(split.user_id, sid)] for split in splits for sid in split.train
    ]
    catalog = select_features(train_records, threshold, seed)
    return ProcessedData(
        sessions=dict(cleaned),
        clean_report=clean_report,
        records=balanced,
        splits=splits,
        catalog=catalog,
        popularity_index=popularity,
        n_unlabelable=n_unlabelable,
    )


def train_all(
    records: Sequence[SessionRecord],
    splits: Sequence[UserSplit],
    catalog: FeatureCatalog,
    seed: int,
    *,
    twin_space: SearchSpace = DEFAULT_TWIN_SPACE,
    unified_space: SearchSpace = DEFAULT_UNIFIED_SPACE,
) -> TrainedModels:
    """Twins, their sensitivity vectors, and both population models."""
    twins, vectors = train_twins(records, splits, catalog, seed, twin_space)
    train_dataset = build_dataset(records, splits, vectors, catalog, "train")
    test_dataset = build_dataset(records, splits, vectors, catalog, "test")
    unified, unified_config, _ = train_unified(train_dataset, seed, unified_space)
    benchmark, benchmark_config, _ = train_benchmark(train_dataset, seed, unified_space)
    return TrainedModels(
        twins=twins,
        vectors=vectors,
        train_dataset=train_dataset,
        test_dataset=test_dataset,
        unified=unified,
        unified_config=unified_config,
        benchmark=benchmark,
        benchmark_config=benchmark_config,
    )


def _variant_scores(
    model: TreeEnsemble,
    X: np.ndarray,
    dataset: Dataset,
    video_ids: Sequence[str],
) -> dict[str, object]:
    predictions = np.clip(predict_matrix(model, X), 0.0, 1.0)
    scores = metrics(dataset.y, predictions).as_dict()
    scores["bin10_accuracy"] = bin10_accuracy(dataset.y, predictions)
    scores["binary70_accuracy"] = binary_at_threshold(dataset.y, predictions, 0.7)
    scores["quit50_pcc"] = quit50_pcc(video_ids, dataset.y, predictions)
    return scores


def _filter_splits(
    splits: Sequence[UserSplit], surviving: set[tuple[str, str]]
) -> list[UserSplit]:
    return [
        UserSplit(
            user_id=split.user_id,
            train=tuple(s for s in split.train if (split.user_id, s) in surviving),
            test=tuple(s for s in split.test if (split.user_id, s) in surviving),
        )
        for split in splits
    ]


def evaluate_horizons(
    data: ProcessedData,
    horizons: Sequence[str],
    seed: int,
    *,
    twin_space: SearchSpace = DEFAULT_TWIN_SPACE,
    unified_space: SearchSpace = DEFAULT_UNIFIED_SPACE,
) -> list[dict[str, object]]:
    """Retrain twins and both population models per horizon; score on test rows.

    Features come from each horizon's truncated view; labels, the balanced
    session set, the splits, and the feature catalog all stay fixed at their
    full-session values.
    """
    balanced = data.balanced_sessions()
    video_of = data.video_of()
    entries: list[dict[str, object]] = []
    for h_index, label in enumerate(horizons):
        seconds = horizon_seconds(label)
        records_h, dropped = truncate_horizon(balanced, seconds, data.popularity_index)
        surviving = {(r.user_id, r.session_id) for r in records_h}
        splits_h = _filter_splits(data.splits, surviving)
        models = train_all(
            records_h,
            splits_h,
            data.catalog,
            _derived_seed(seed, 0x40, h_index),
            twin_space=twin_space,
            unified_space=unified_space,
        )
        test = models.test_dataset
        test_videos = [
            video_of.get(SessionKey(u, s), "")
            for u, s in zip(test.user_ids, test.session_ids)
        ]
        entries.append(
            {
                "horizon": label,
                "horizon_s": seconds,
                "n_dropped": dropped,
                "n_train": len(models.train_dataset.y),
                "n_test": len(test.y),
                "augmented": _variant_scores(
                    models.unified, test.X_augmented, test, test_videos
                ),
                "benchmark": _variant_scores(
                    models.benchmark, test.X_base, test, test_videos
                ),
            }
        )
    return entries


def threshold_sweep(
    data: ProcessedData,
    thresholds: Sequence[float],
    seed: int,
    *,
    twin_space: SearchSpace = DEFAULT_TWIN_SPACE,
    unified_space: SearchSpace = DEFAULT_UNIFIED_SPACE,
    include_timing: bool = True,
) -> list[dict[str, object]]:
    """Rerun selection, twins, and the unified model at each threshold."""
    train_records = data.train_records()
    entries: list[dict[str, object]] = []
    for t_index, threshold in enumerate(thresholds):
        started = time.perf_counter()
        sweep_seed = _derived_seed(seed, 0x7E, t_index)
        try:
            catalog_t = select_features(train_records, threshold, sweep_seed)
        except ConfigurationError as exc:
            entries.append(
                {
                    "threshold": threshold,
                    "n_features": 0,
                    "features": [],
                    "mae": None,
                    "error": str(exc),
                }
            )
            continue
        twins_t, vectors_t = train_twins(
            data.records, data.splits, catalog_t, sweep_seed, twin_space
        )
        train_ds = build_dataset(data.records, data.splits, vectors_t, catalog_t, "train")
        test_ds = build_dataset(data.records, data.splits, vectors_t, catalog_t, "test")
        unified_t, _, _ = train_unified(train_ds, sweep_seed, unified_space)
        predictions = np.clip(predict_matrix(unified_t, test_ds.X_augmented), 0.0, 1.0)
        entry: dict[str, object] = {
            "threshold": threshold,
            "n_features": len(catalog_t.selected_names),
            "features": catalog_t.selected_names,
            "mae": float(np.mean(np.abs(test_ds.y - predictions))),
        }
        if include_timing:
            entry["wall_time_s"] = time.perf_counter() - started
        entries.append(entry)
    return entries


def full_run(
    sessions: Mapping[SessionKey, Sequence[RawEvent]],
    *,
    seed: int,
    threshold: float,
    horizons: Sequence[str] = ("full",),
    sweep_thresholds: Sequence[float] | None = None,
    clean_config: CleanConfig | None = None,
    twin_space: SearchSpace = DEFAULT_TWIN_SPACE,
    unified_space: SearchSpace = DEFAULT_UNIFIED_SPACE,
    include_timing: bool = True,
) -> tuple[dict[str, object], ProcessedData, TrainedModels]:
    """The whole pipeline plus a versioned evaluation report."""
    data = process(sessions, seed=seed, threshold=threshold, clean_config=clean_config)
    models = train_all(
        data.records,
        data.splits,
        data.catalog,
        seed,
        twin_space=twin_space,
        unified_space=unified_space,
    )
    horizon_entries = evaluate_horizons(
        data, horizons, seed, twin_space=twin_space, unified_space=unified_space
    )
    report: dict[str, object] = {
        "schema": REPORT_SCHEMA,
        "seed": seed,
        "threshold": threshold,
        "n_users": len(data.splits),
        "n_records": len(data.records),
        "n_unlabelable": data.n_unlabelable,
        "clean": data.clean_report.as_dict(),
        "catalog": data.catalog.as_dict(),
        "twins": {
            "n_twins": len(models.twins),
            "n_degenerate": sum(1 for v in models.vectors if v.degenerate),
            "mean_test_mae": _mean_twin_test_mae(models.twins),
        },
        "unified_config": models.unified_config,
        "benchmark_config": models.benchmark_config,
        "horizons": horizon_entries,
    }
    if sweep_thresholds is not None:
        report["sweep"] = threshold_sweep(
            data,
            sweep_thresholds,
            seed,
            twin_space=twin_space,
            unified_space=unified_space,
            include_timing=include_timing,
        )
    return report, data, models


def _mean_twin_test_mae(twins: Sequence[TwinEntry]) -> float | None:
    values = [t.test_mae for t in twins if t.test_mae is not None]
    if not values:
        return None
    return float(np.mean(values))


def write_plot_data(report: Mapping[str, object], directory: str | Path) -> list[Path]:
    """CSVs shaped for external plotting; returns the files written."""
    import csv

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    horizons = report.get("horizons") or []
    if horizons:
        path = directory / "mae_vs_horizon.csv"
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["horizon", "horizon_s", "augmented_mae", "benchmark_mae"])
            for entry in horizons:
                writer.writerow(
                    [
                        entry["horizon"],
                        "" if entry["horizon_s"] is None else repr(entry["horizon_s"]),
                        repr(entry["augmented"]["mae"]),
                        repr(entry["benchmark"]["mae"]),
                    ]
                )
        written.append(path)

    sweep = report.get("sweep") or []
    if sweep:
        path = directory / "mae_vs_threshold.csv"
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["threshold", "n_features", "mae"])
            for entry in sweep:
                writer.writerow(
                    [
                        repr(float(entry["threshold"])),
                        entry["n_features"],
                        "" if entry["mae"] is None else repr(entry["mae"]),
                    ]
                )
        written.append(path)
    return written
