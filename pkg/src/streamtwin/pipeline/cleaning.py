"""Corpus cleaning: ordered repair/removal rules with first-trigger attribution."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..events import RawEvent, SessionKey
from .features import session_play_time

__all__ = ["CleanConfig", "CleanReport", "clean", "RULE_IDS"]

RULE_IDS = tuple(f"R{i}" for i in range(1, 12))

_OPTIONAL_NUMERIC = ("bitrate", "videotime_start", "videotime_end", "event_duration", "video_duration")


@dataclass(frozen=True)
class CleanConfig:
    bot_repeat_threshold: int = 100  # R2: > this many sessions of one video
    min_sessions_per_user: int = 50  # R3
    min_distinct_videos: int = 5  # R4
    min_play_time_s: float = 10.0  # R8
    max_session_span_h: float = 24.0  # R9


@dataclass
class CleanReport:
    sessions_in: int = 0
    sessions_out: int = 0
    users_in: int = 0
    users_out: int = 0
    passes: int = 0
    values_repaired: dict[str, int] = field(default_factory=dict)
    sessions_removed: dict[str, int] = field(default_factory=dict)
    users_removed: dict[str, int] = field(default_factory=dict)

    def bump(self, bucket: dict[str, int], rule: str, by: int = 1) -> None:
        bucket[rule] = bucket.get(rule, 0) + by

    def as_dict(self) -> dict[str, object]:
        return {
            "sessions_in": self.sessions_in,
            "sessions_out": self.sessions_out,
            "users_in": self.users_in,
            "users_out": self.users_out,
            "passes": self.passes,
            "values_repaired": dict(sorted(self.values_repaired.items())),
            "sessions_removed": dict(sorted(self.sessions_removed.items())),
            "users_removed": dict(sorted(self.users_removed.items())),
        }


def _repair_nulls(events: Sequence[RawEvent]) -> int:
    """R1: collapse non-finite optional numerics to the single null sentinel."""
    repaired = 0
    for event in events:
        for name in _OPTIONAL_NUMERIC:
            value = getattr(event, name)
            if value is not None and not math.isfinite(value):
                setattr(event, name, None)
                repaired += 1
    return repaired


def _standardize_durations(sessions: Mapping[SessionKey, list[RawEvent]]) -> int:
    """R5: every event gets the maximum duration observed for its video."""
    max_by_video: dict[str, float] = {}
    for events in sessions.values():
        for event in events:
            if event.video_duration is not None:
                video = event.video_id
                if video not in max_by_video or event.video_duration > max_by_video[video]:
                    max_by_video[video] = event.video_duration
    repaired = 0
    for events in sessions.values():
        for event in events:
            target = max_by_video.get(event.video_id)
            if target is not None and event.video_duration != target:
                event.video_duration = target
                repaired += 1
    return repaired


def _session_rule(events: Sequence[RawEvent], config: CleanConfig) -> str | None:
    """First R6..R11 rule the session violates, else None."""
    if any(e.event_type == "error" or e.error_code is not None for e in events):
        return "R6"
    ends = [e.videotime_end for e in events if e.videotime_end is not None]
    if any(end < 0 for end in ends) or not ends:
        return "R7"
    if session_play_time(events) < config.min_play_time_s:
        return "R8"
    times = [e.client_time for e in events]
    if max(times) - min(times) > config.max_session_span_h * 3600.0 * 1000.0:
        return "R9"
    if any(e.event_duration is not None and e.event_duration < 0 for e in events):
        return "R10"
    for e in events:
        if e.videotime_end is not None and e.video_duration is not None:
            if e.videotime_end > e.video_duration:
                return "R11"
    return None


def _user_rule(
    session_keys: Sequence[SessionKey],
    sessions: Mapping[SessionKey, list[RawEvent]],
    config: CleanConfig,
) -> str | None:
    """First R2..R4 rule the user violates, else None."""
    video_counts: dict[str, int] = {}
    for key in session_keys:
        events = sessions[key]
        video = events[0].video_id if events else "unknown"
        video_counts[video] = video_counts.get(video, 0) + 1
    if video_counts and max(video_counts.values()) > config.bot_repeat_threshold:
        return "R2"
    if len(session_keys) < config.min_sessions_per_user:
        return "R3"
    if len(video_counts) < config.min_distinct_videos:
        return "R4"
    return None


def clean(
    sessions: Mapping[SessionKey, Sequence[RawEvent]],
    config: CleanConfig | None = None,
) -> tuple[dict[SessionKey, list[RawEvent]], CleanReport]:
    """Apply the R1..R11 rule ladder until nothing changes.

    Repairs (R1 null standardization, R5 duration standardization) mutate
    copies; removals attribute each session and user to the first rule that
    fired for it. User rules are re-evaluated after session removals, and R5
    is re-derived after removals, so the result is a fixpoint: cleaning an
    already-clean corpus is a no-op.
    """
    config = config or CleanConfig()
    live: dict[SessionKey, list[RawEvent]] = {
        key: [RawEvent(**{f: getattr(e, f) for f in e.__dataclass_fields__}) for e in events]
        for key, events in sessions.items()
    }
    report = CleanReport(
        sessions_in=len(live),
        users_in=len({key.user_id for key in live}),
    )

    changed = True
    while changed:
        changed = False
        report.passes += 1

        repaired = sum(_repair_nulls(events) for events in live.values())
        if repaired:
            report.bump(report.values_repaired, "R1", repaired)

        by_user: dict[str, list[SessionKey]] = {}
        for key in live:
            by_user.setdefault(key.user_id, []).append(key)
        for user in sorted(by_user):
            rule = _user_rule(by_user[user], live, config)
            if rule is not None:
                report.bump(report.users_removed, rule)
                report.bump(report.sessions_removed, rule, len(by_user[user]))
                for key in by_user[user]:
                    del live[key]
                changed = True

        # Session rules below already see these standardized durations, so a
        # repair alone does not force another pass; removals do, and the next
        # pass re-derives the per-video maxima.
        repaired = _standardize_durations(live)
        if repaired:
            report.bump(report.values_repaired, "R5", repaired)

        for key in sorted(live):
            rule = _session_rule(live[key], config)
            if rule is not None:
                report.bump(report.sessions_removed, rule)
                del live[key]
                changed = True

    report.sessions_out = len(live)
    report.users_out = len({key.user_id for key in live})
    return live, report
