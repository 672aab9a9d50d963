"""Feature engineering: event enrichment, session compression, engagement label."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from ..errors import DroppableSession
from ..events import RawEvent, SessionKey
from ..util import clamp01

__all__ = [
    "SCREEN_SIZE",
    "EnrichedEvent",
    "SessionRecord",
    "RECORD_FIELDS",
    "build_popularity_index",
    "engineer",
    "compute_engagement",
    "compress",
    "skewness",
    "positional_skew",
    "session_play_time",
    "write_records_csv",
    "read_records_csv",
    "records_to_matrix",
]

# Ordinal approximation of physical display size; console shares the tv slot.
SCREEN_SIZE: dict[str, int | None] = {
    "phone": 1,
    "tablet": 2,
    "laptop": 3,
    "desktop": 4,
    "tv": 5,
    "console": 5,
    "unknown": None,
}


@dataclass(slots=True)
class EnrichedEvent:
    event: RawEvent
    hour_of_day: int
    latency_ms: int
    popularity: float | None
    screen_size: int | None
    bitrate_delta: float | None = None


@dataclass(slots=True)
class SessionRecord:
    user_id: str
    session_id: str
    hour_of_day: int
    popularity: float | None
    screen_size: int | None
    video_duration: float
    startup_delay: float
    play_time: float
    stall_count: int
    stall_duration_mean: float | None
    stall_duration_std: float | None
    stall_duration_skew: float | None
    bitrate_mean: float | None
    bitrate_std: float | None
    switch_count: int
    switch_magnitude_mean: float | None
    switch_skew: float | None
    seek_count: int
    pause_count: int
    latency_mean: float
    engagement: float


RECORD_FIELDS = tuple(f.name for f in fields(SessionRecord))
_INT_RECORD_FIELDS = {"hour_of_day", "screen_size", "stall_count", "switch_count", "seek_count", "pause_count"}


def build_popularity_index(sessions: Mapping[SessionKey, Sequence[RawEvent]]) -> dict[str, float]:
    """video_id -> ln(1 + number of sessions of that video in the corpus)."""
    counts: dict[str, int] = {}
    for events in sessions.values():
        if events:
            video = events[0].video_id
            counts[video] = counts.get(video, 0) + 1
    return {video: math.log1p(count) for video, count in counts.items()}


def engineer(
    sessions: Mapping[SessionKey, Sequence[RawEvent]],
    popularity_index: Mapping[str, float] | None = None,
) -> dict[SessionKey, list[EnrichedEvent]]:
    """Attach derived per-event fields (hour, latency, popularity, screen, switch delta)."""
    if popularity_index is None:
        popularity_index = build_popularity_index(sessions)
    out: dict[SessionKey, list[EnrichedEvent]] = {}
    for key, events in sessions.items():
        enriched: list[EnrichedEvent] = []
        last_bitrate: float | None = None
        for event in events:
            delta: float | None = None
            if event.event_type == "bitrate_switch" and event.bitrate is not None and last_bitrate is not None:
                delta = event.bitrate - last_bitrate
            if event.bitrate is not None:
                last_bitrate = event.bitrate
            stamp = datetime.fromtimestamp(event.client_time / 1000.0, tz=timezone.utc)
            enriched.append(
                EnrichedEvent(
                    event=event,
                    hour_of_day=stamp.hour,
                    latency_ms=event.server_time - event.client_time,
                    popularity=popularity_index.get(event.video_id),
                    screen_size=SCREEN_SIZE.get(event.device_class),
                    bitrate_delta=delta,
                )
            )
        out[key] = enriched
    return out


def compute_engagement(events: Sequence[RawEvent], video_duration: float | None = None) -> float:
    """Furthest playback position over video duration, clamped to [0, 1]."""
    ends = [e.videotime_end for e in events if e.videotime_end is not None]
    if not ends:
        raise DroppableSession("no usable videotime_end in session")
    duration = video_duration
    if duration is None:
        durations = [e.video_duration for e in events if e.video_duration is not None]
        duration = max(durations) if durations else None
    if duration is None or duration <= 0:
        raise DroppableSession("no usable video duration in session")
    return clamp01(max(ends) / duration)


def skewness(samples: Sequence[float], weights: Sequence[float] | None = None) -> float | None:
    """Biased third standardized moment about the (weighted) mean.

    None when fewer than 3 samples or the variance is zero.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.size < 3:
        return None
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        return None
    mu = float((w * x).sum() / total)
    d = x - mu
    m2 = float((w * d * d).sum() / total)
    if m2 == 0.0:
        return None
    m3 = float((w * d * d * d).sum() / total)
    return m3 / m2**1.5


def positional_skew(
    positions: Sequence[float], weights: Sequence[float], window: float
) -> float | None:
    """Where in playback does the weight sit: early-heavy > 0, late-heavy < 0.

    Third standardized moment of (window/2 - position) about zero, so mass in
    the first half of the window is positive, mass in the second half is
    negative, and a pattern mirrored around the midpoint cancels exactly.
    """
    p = np.asarray(positions, dtype=np.float64)
    if p.size < 3 or window is None or window <= 0:
        return None
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        return None
    e = window / 2.0 - p
    m2 = float((w * e * e).sum() / total)
    if m2 == 0.0:
        return None
    m3 = float((w * e * e * e).sum() / total)
    return m3 / m2**1.5


def session_play_time(events: Sequence[RawEvent]) -> float:
    """Seconds of content played: summed play/heartbeat durations, with fallbacks."""
    durations = [
        e.event_duration
        for e in events
        if e.event_type in ("play", "heartbeat") and e.event_duration is not None
    ]
    if durations:
        return float(sum(durations))
    ends = [e.videotime_end for e in events if e.videotime_end is not None]
    if not ends:
        return 0.0
    starts = [e.videotime_start for e in events if e.videotime_start is not None]
    if starts:
        return max(0.0, max(ends) - min(starts))
    return max(0.0, max(ends))


def _mean_std(values: list[float]) -> tuple[float | None, float | None]:
    if not values:
        return None, None
    arr = np.asarray(values, dtype=np.float64)
    return float(arr.mean()), float(arr.std())


def compress(
    key: SessionKey,
    enriched: Sequence[EnrichedEvent],
    engagement_override: float | None = None,
) -> SessionRecord:
    """Collapse one session's events into a fixed-width record.

    `engagement_override` substitutes the label (used when features come from
    a truncated view of the session but the label must stay full-session).
    """
    events = [ee.event for ee in enriched]
    if not events:
        raise DroppableSession("empty session")

    durations = [e.video_duration for e in events if e.video_duration is not None]
    video_duration = max(durations) if durations else 0.0
    if engagement_override is not None:
        engagement = engagement_override
    else:
        engagement = compute_engagement(events, video_duration if video_duration > 0 else None)

    startup_delay = 0.0
    for e in events:
        if e.event_type == "startup":
            startup_delay = e.event_duration if e.event_duration is not None else 0.0
            break

    ends = [e.videotime_end for e in events if e.videotime_end is not None]
    window = max(ends) if ends else 0.0

    stall_durations: list[float] = []
    stall_positions: list[float] = []
    stall_weights: list[float] = []
    switch_magnitudes: list[float] = []
    switch_positions: list[float] = []
    switch_weights: list[float] = []
    bitrates: list[float] = []
    stall_count = switch_count = seek_count = pause_count = 0

    for ee in enriched:
        e = ee.event
        if e.bitrate is not None:
            bitrates.append(e.bitrate)
        if e.event_type == "stall":
            stall_count += 1
            if e.event_duration is not None:
                stall_durations.append(e.event_duration)
            position = e.videotime_start if e.videotime_start is not None else e.videotime_end
            if position is not None:
                stall_positions.append(position)
                stall_weights.append(e.event_duration if e.event_duration is not None else 1.0)
        elif e.event_type == "bitrate_switch":
            switch_count += 1
            if ee.bitrate_delta is not None:
                switch_magnitudes.append(abs(ee.bitrate_delta))
            position = e.videotime_start if e.videotime_start is not None else e.videotime_end
            if position is not None:
                switch_positions.append(position)
                switch_weights.append(abs(ee.bitrate_delta) if ee.bitrate_delta is not None else 1.0)
        elif e.event_type == "seek":
            seek_count += 1
        elif e.event_type == "pause":
            pause_count += 1

    stall_mean, stall_std = _mean_std(stall_durations)
    bitrate_mean, bitrate_std = _mean_std(bitrates)
    switch_mean, _ = _mean_std(switch_magnitudes)

    first = enriched[0]
    return SessionRecord(
        user_id=key.user_id,
        session_id=key.session_id,
        hour_of_day=first.hour_of_day,
        popularity=next((ee.popularity for ee in enriched if ee.popularity is not None), None),
        screen_size=next((ee.screen_size for ee in enriched if ee.screen_size is not None), None),
        video_duration=video_duration,
        startup_delay=startup_delay,
        play_time=session_play_time(events),
        stall_count=stall_count,
        stall_duration_mean=stall_mean,
        stall_duration_std=stall_std,
        stall_duration_skew=positional_skew(stall_positions, stall_weights, window),
        bitrate_mean=bitrate_mean,
        bitrate_std=bitrate_std,
        switch_count=switch_count,
        switch_magnitude_mean=switch_mean,
        switch_skew=positional_skew(switch_positions, switch_weights, window),
        seek_count=seek_count,
        pause_count=pause_count,
        latency_mean=float(np.mean([ee.latency_ms for ee in enriched])),
        engagement=engagement,
    )


def write_records_csv(records: Iterable[SessionRecord], target: str | Path | IO[str]) -> None:
    """One row per session; floats written with repr so reloads are exact."""
    if hasattr(target, "write"):
        _write_records(records, target)  # type: ignore[arg-type]
        return
    with open(target, "w", newline="") as handle:
        _write_records(records, handle)


def _write_records(records: Iterable[SessionRecord], handle: IO[str]) -> None:
    writer = csv.writer(handle)
    writer.writerow(RECORD_FIELDS)
    for record in records:
        row = []
        for name in RECORD_FIELDS:
            value = getattr(record, name)
            if value is None:
                row.append("")
            elif isinstance(value, float):
                row.append(repr(value))
            else:
                row.append(value)
        writer.writerow(row)


def read_records_csv(source: str | Path | IO[str]) -> list[SessionRecord]:
    if hasattr(source, "read"):
        return _read_records(source)  # type: ignore[arg-type]
    with open(source, "r", newline="") as handle:
        return _read_records(handle)


def _read_records(handle: IO[str]) -> list[SessionRecord]:
    reader = csv.DictReader(handle)
    records = []
    for row in reader:
        kwargs: dict[str, object] = {}
        for name in RECORD_FIELDS:
            raw = row.get(name, "")
            if name in ("user_id", "session_id"):
                kwargs[name] = raw
            elif raw == "" or raw is None:
                kwargs[name] = None
            elif name in _INT_RECORD_FIELDS:
                kwargs[name] = int(float(raw))
            else:
                kwargs[name] = float(raw)
        records.append(SessionRecord(**kwargs))  # type: ignore[arg-type]
    return records


def records_to_matrix(
    records: Sequence[SessionRecord], feature_names: Sequence[str]
) -> tuple[np.ndarray, np.ndarray]:
    """(X, y) matrices; None feature values become NaN."""
    X = np.empty((len(records), len(feature_names)), dtype=np.float64)
    y = np.empty(len(records), dtype=np.float64)
    for i, record in enumerate(records):
        for j, name in enumerate(feature_names):
            value = getattr(record, name)
            X[i, j] = np.nan if value is None else float(value)
        y[i] = record.engagement
    return X, y
