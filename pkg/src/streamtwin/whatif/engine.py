"""Cohort what-if runs: simulate, featurize, predict, aggregate, difference."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..engagement import SENS_PREFIX
from ..errors import ConfigurationError
from ..events import RawEvent, SessionKey
from ..learner.boosting import TreeEnsemble, predict_matrix
from ..pipeline.features import compress, engineer
from ..twins import SensitivityVector
from ..util import rng_from
from .simulator import WhatIfScenario, simulate_session
from .traces import BandwidthTrace

__all__ = [
    "UnknownTraceError",
    "UnknownUserError",
    "ScenarioOutcome",
    "WhatIfResult",
    "resolve_cohort",
    "run_whatif",
    "reference_grid",
    "result_table",
]


class UnknownTraceError(ConfigurationError):
    def __init__(self, name: str, known: Sequence[str]):
        self.trace_name = name
        super().__init__(f"unknown trace {name!r}; available: {', '.join(sorted(known))}")


class UnknownUserError(ConfigurationError):
    def __init__(self, names: Sequence[str]):
        self.user_ids = list(names)
        super().__init__(f"unknown user(s): {', '.join(names)}")


@dataclass
class ScenarioOutcome:
    name: str
    scenario: WhatIfScenario
    cohort: list[str]
    predictions: list[float]
    aggregates: dict[str, float]

    def as_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "trace": self.scenario.trace,
            "abr": self.scenario.abr,
            "segment_size": self.scenario.segment_size,
            "video_duration": self.scenario.video_duration,
            "n_sessions": self.scenario.n_sessions,
            "seed": self.scenario.seed,
            "cohort": list(self.cohort),
            "predictions": list(self.predictions),
            "aggregates": dict(self.aggregates),
        }


@dataclass
class WhatIfResult:
    outcomes: list[ScenarioOutcome]
    deltas: list[dict[str, object]]

    def as_dict(self) -> dict[str, object]:
        return {
            "schema": "whatif-result/v1",
            "scenarios": [o.as_dict() for o in self.outcomes],
            "deltas": [dict(d) for d in self.deltas],
        }


def resolve_cohort(
    cohort: Sequence[str] | str,
    vectors: Mapping[str, SensitivityVector],
    seed: int,
) -> list[str]:
    """Materialize a cohort spec: explicit ids, or 'random:k' drawn from the db."""
    if isinstance(cohort, str):
        if not cohort.startswith("random:"):
            raise ConfigurationError(
                f"cohort must be a list of user ids or 'random:k', got {cohort!r}"
            )
        try:
            k = int(cohort.split(":", 1)[1])
        except ValueError:
            raise ConfigurationError(f"bad cohort size in {cohort!r}") from None
        if k < 1:
            raise ConfigurationError(f"cohort size must be >= 1, got {k}")
        population = sorted(vectors)
        if k > len(population):
            raise ConfigurationError(
                f"cohort size {k} exceeds the {len(population)} users in the sensitivity db"
            )
        rng = rng_from(seed, 0xC0)
        chosen = rng.choice(len(population), size=k, replace=False)
        return [population[i] for i in sorted(chosen)]
    ids = list(cohort)
    if not ids:
        raise ConfigurationError("cohort must name at least one user")
    missing = sorted(set(ids) - set(vectors))
    if missing:
        raise UnknownUserError(missing)
    return ids


def _prediction_rows(
    feature_names: Sequence[str],
    records: Sequence,
    vectors: Mapping[str, SensitivityVector],
) -> np.ndarray:
    X = np.empty((len(records), len(feature_names)), dtype=np.float64)
    for i, record in enumerate(records):
        weights = vectors[record.user_id].weights
        for j, fname in enumerate(feature_names):
            if fname.startswith(SENS_PREFIX):
                X[i, j] = weights.get(fname[len(SENS_PREFIX):], 0.0)
            else:
                value = getattr(record, fname)
                X[i, j] = np.nan if value is None else float(value)
    return X


def run_whatif(
    scenarios: Sequence[WhatIfScenario],
    model: TreeEnsemble,
    vectors: Sequence[SensitivityVector],
    traces: Mapping[str, BandwidthTrace],
) -> WhatIfResult:
    """Simulate each scenario over its cohort and score with the engagement model.

    Every scenario gets n_sessions per cohort user; popularity features are
    derived from the scenario's own simulated batch, and predictions are
    clamped to [0, 1] before aggregation.
    """
    if not scenarios:
        raise ConfigurationError("need at least one scenario")
    by_user = {v.user_id: v for v in vectors}
    names: list[str] = []
    for i, scenario in enumerate(scenarios):
        label = scenario.label(i)
        if label in names:
            raise ConfigurationError(f"duplicate scenario name {label!r}")
        names.append(label)

    outcomes: list[ScenarioOutcome] = []
    for i, scenario in enumerate(scenarios):
        scenario.validate()
        if scenario.trace not in traces:
            raise UnknownTraceError(scenario.trace, list(traces))
        trace = traces[scenario.trace]
        cohort = resolve_cohort(scenario.cohort, by_user, scenario.seed)

        sessions: dict[SessionKey, list[RawEvent]] = {}
        for u, user_id in enumerate(cohort):
            for s in range(scenario.n_sessions):
                session_id = f"{names[i]}:{user_id}:{s}"
                events, _ = simulate_session(
                    scenario,
                    trace,
                    np.random.SeedSequence([scenario.seed, u, s]),
                    user_id=user_id,
                    session_id=session_id,
                    video_id=f"whatif:{names[i]}",
                )
                sessions[SessionKey(user_id, session_id)] = events

        enriched = engineer(sessions)
        records = [compress(key, enriched[key]) for key in sorted(sessions)]
        X = _prediction_rows(model.feature_names, records, by_user)
        predictions = np.clip(predict_matrix(model, X), 0.0, 1.0)
        outcomes.append(
            ScenarioOutcome(
                name=names[i],
                scenario=scenario,
                cohort=cohort,
                predictions=[float(p) for p in predictions],
                aggregates={
                    "mean": float(predictions.mean()),
                    "std": float(predictions.std()),
                    "min": float(predictions.min()),
                    "median": float(np.median(predictions)),
                    "max": float(predictions.max()),
                },
            )
        )

    deltas = [
        {
            "a": a.name,
            "b": b.name,
            "mean_delta": a.aggregates["mean"] - b.aggregates["mean"],
        }
        for a in outcomes
        for b in outcomes
        if a.name != b.name
    ]
    return WhatIfResult(outcomes=outcomes, deltas=deltas)


# Survey grid: 17 rows over segment size x policy archetype x trace, the shape
# used for side-by-side aggregate tables. Two rows repeat a low-latency
# configuration under a second name (distinct seed), standing in for a second
# low-latency policy flavor that shares the same archetype here.
_GRID_ROWS: tuple[tuple[int, str, str], ...] = (
    (1, "hybrid-low-latency", "fcc-like"),
    (1, "hybrid-low-latency", "cascade-20"),
    (1, "hybrid-low-latency", "cascade-5"),
    (1, "hybrid-low-latency", "constant-16"),
    (1, "hybrid-low-latency", "lte-like"),
    (2, "buffer", "fcc-like"),
    (2, "buffer", "cascade-20"),
    (2, "hybrid-low-latency", "fcc-like"),
    (2, "hybrid-low-latency", "cascade-20"),
    (2, "hybrid-low-latency", "cascade-5"),
    (2, "hybrid-low-latency", "constant-16"),
    (2, "hybrid-low-latency", "constant-4"),
    (2, "hybrid-low-latency", "lte-like"),
    (2, "hybrid-low-latency", "cascade-5"),
    (2, "hybrid-low-latency", "lte-like"),
    (2, "throughput", "fcc-like"),
    (2, "throughput", "cascade-20"),
)


def reference_grid(
    cohort: Sequence[str] | str,
    n_sessions: int,
    seed: int,
    *,
    video_duration: float = 600.0,
) -> list[WhatIfScenario]:
    """The 17-scenario survey grid, with unique names and per-row seeds."""
    scenarios: list[WhatIfScenario] = []
    seen: dict[str, int] = {}
    for i, (segment, abr, trace) in enumerate(_GRID_ROWS):
        base = f"{segment}s/{abr}/{trace}"
        seen[base] = seen.get(base, 0) + 1
        name = base if seen[base] == 1 else f"{base}#{seen[base]}"
        scenarios.append(
            WhatIfScenario(
                trace=trace,
                abr=abr,
                segment_size=float(segment),
                video_duration=video_duration,
                n_sessions=n_sessions,
                cohort=tuple(cohort) if not isinstance(cohort, str) else cohort,
                seed=seed + i,
                name=name,
            )
        )
    return scenarios


def result_table(result: WhatIfResult) -> list[dict[str, object]]:
    """One row per scenario: configuration columns plus the five aggregates."""
    rows: list[dict[str, object]] = []
    for outcome in result.outcomes:
        rows.append(
            {
                "name": outcome.name,
                "segment_size": outcome.scenario.segment_size,
                "abr": outcome.scenario.abr,
                "trace": outcome.scenario.trace,
                "mean": outcome.aggregates["mean"],
                "std": outcome.aggregates["std"],
                "min": outcome.aggregates["min"],
                "median": outcome.aggregates["median"],
                "max": outcome.aggregates["max"],
            }
        )
    return rows
