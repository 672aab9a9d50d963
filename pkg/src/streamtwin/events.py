"""Raw playback-event model: parsing, normalization, session grouping, persistence."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import IO, Iterable, Mapping, NamedTuple

from .errors import ConfigurationError

__all__ = [
    "EVENT_TYPES",
    "EVENT_TYPE_ALIASES",
    "DEVICE_CLASSES",
    "RawEvent",
    "SessionKey",
    "ParseReport",
    "parse_event_log",
    "group_sessions",
    "write_events_csv",
    "write_events_jsonl",
]

EVENT_TYPES = frozenset(
    {"startup", "play", "pause", "seek", "stall", "bitrate_switch", "heartbeat", "quit", "error"}
)

# Vendor logs disagree on names for the same thing; collapse known synonyms.
EVENT_TYPE_ALIASES = {
    "rebuffering": "stall",
    "buffering": "stall",
    "qualitychange": "bitrate_switch",
    "startuptime": "startup",
}

DEVICE_CLASSES = frozenset({"phone", "tablet", "laptop", "desktop", "tv", "console", "unknown"})

_MANDATORY = ("user_id", "session_id", "event_type")
_OPTIONAL_NUMERIC = ("bitrate", "videotime_start", "videotime_end", "event_duration", "video_duration")


@dataclass(slots=True)
class RawEvent:
    """One player telemetry event. Times are epoch milliseconds (UTC)."""

    client_time: int
    server_time: int
    user_id: str
    video_id: str
    session_id: str
    event_type: str
    device_class: str = "unknown"
    cdn: str = "unknown"
    bitrate: float | None = None
    videotime_start: float | None = None
    videotime_end: float | None = None
    event_duration: float | None = None
    video_duration: float | None = None
    error_code: str | None = None


EVENT_FIELDS = tuple(f.name for f in fields(RawEvent))


class SessionKey(NamedTuple):
    user_id: str
    session_id: str


@dataclass(slots=True)
class ParseReport:
    rows: int = 0
    parsed: int = 0
    skipped: int = 0
    nulled_fields: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "rows": self.rows,
            "parsed": self.parsed,
            "skipped": self.skipped,
            "nulled_fields": self.nulled_fields,
        }


def _parse_int(value: object) -> int | None:
    if value is None:
        return None
    try:
        out = int(float(value))  # tolerate "1700000000000.0"
    except (TypeError, ValueError):
        return None
    return out


def _parse_optional_float(value: object) -> tuple[float | None, bool]:
    """(value, was_nulled): unparseable or non-finite numerics become None."""
    if value is None or value == "":
        return None, False
    try:
        out = float(value)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        return None, True
    if not math.isfinite(out):
        return None, True
    return out, False


def event_from_record(record: Mapping[str, object]) -> tuple[RawEvent | None, int]:
    """Build a RawEvent from one log row.

    Returns (event, nulled_field_count); (None, 0) when the row is malformed
    (missing mandatory field, unknown event type, unusable timestamps).
    """
    raw_type = record.get("event_type")
    if raw_type is None or raw_type == "":
        return None, 0
    event_type = EVENT_TYPE_ALIASES.get(str(raw_type).strip().lower(), str(raw_type).strip().lower())
    if event_type not in EVENT_TYPES:
        return None, 0

    user_id = str(record.get("user_id") or "").strip()
    session_id = str(record.get("session_id") or "").strip()
    if not user_id or not session_id:
        return None, 0

    client_time = _parse_int(record.get("client_time"))
    server_time = _parse_int(record.get("server_time"))
    if client_time is None:
        return None, 0
    if server_time is None:
        server_time = client_time

    device = str(record.get("device_class") or "unknown").strip().lower()
    if device not in DEVICE_CLASSES:
        device = "unknown"

    nulled = 0
    numerics: dict[str, float | None] = {}
    for name in _OPTIONAL_NUMERIC:
        value, was_nulled = _parse_optional_float(record.get(name))
        numerics[name] = value
        nulled += int(was_nulled)

    error_code = record.get("error_code")
    error_code = str(error_code) if error_code not in (None, "") else None

    event = RawEvent(
        client_time=client_time,
        server_time=server_time,
        user_id=user_id,
        video_id=str(record.get("video_id") or "unknown").strip(),
        session_id=session_id,
        event_type=event_type,
        device_class=device,
        cdn=str(record.get("cdn") or "unknown").strip(),
        error_code=error_code,
        **numerics,
    )
    return event, nulled


def parse_event_log(source: str | Path | IO[str], fmt: str = "csv") -> tuple[list[RawEvent], ParseReport]:
    """Parse a CSV or JSONL event log; malformed rows are counted and skipped."""
    if fmt not in ("csv", "jsonl"):
        raise ConfigurationError(f"unsupported format {fmt!r}, expected 'csv' or 'jsonl'")

    if hasattr(source, "read"):
        stream: IO[str] = source  # type: ignore[assignment]
        close = False
    else:
        stream = open(source, "r", newline="")
        close = True

    events: list[RawEvent] = []
    report = ParseReport()
    try:
        if fmt == "csv":
            for row in csv.DictReader(stream):
                report.rows += 1
                event, nulled = event_from_record(row)
                report.nulled_fields += nulled
                if event is None:
                    report.skipped += 1
                else:
                    events.append(event)
        else:
            for line in stream:
                line = line.strip()
                if not line:
                    continue
                report.rows += 1
                try:
                    row = json.loads(line)
                except json.JSONDecodeError:
                    report.skipped += 1
                    continue
                if not isinstance(row, dict):
                    report.skipped += 1
                    continue
                event, nulled = event_from_record(row)
                report.nulled_fields += nulled
                if event is None:
                    report.skipped += 1
                else:
                    events.append(event)
    finally:
        if close:
            stream.close()
    report.parsed = len(events)
    return events, report


def group_sessions(events: Iterable[RawEvent]) -> dict[SessionKey, list[RawEvent]]:
    """Group events by (user, session), each list sorted by client_time (stable)."""
    sessions: dict[SessionKey, list[RawEvent]] = {}
    for event in events:
        sessions.setdefault(SessionKey(event.user_id, event.session_id), []).append(event)
    for bucket in sessions.values():
        bucket.sort(key=lambda e: e.client_time)
    return sessions


def _event_to_row(event: RawEvent) -> dict[str, object]:
    return {name: getattr(event, name) for name in EVENT_FIELDS}


def write_events_csv(events: Iterable[RawEvent], target: str | Path | IO[str]) -> None:
    """Canonical CSV: header = RawEvent fields, None rendered as empty string."""
    if hasattr(target, "write"):
        _write_csv_stream(events, target)  # type: ignore[arg-type]
        return
    with open(target, "w", newline="") as handle:
        _write_csv_stream(events, handle)


def _write_csv_stream(events: Iterable[RawEvent], handle: IO[str]) -> None:
    writer = csv.DictWriter(handle, fieldnames=EVENT_FIELDS)
    writer.writeheader()
    for event in events:
        row = {k: ("" if v is None else v) for k, v in _event_to_row(event).items()}
        writer.writerow(row)


def write_events_jsonl(events: Iterable[RawEvent], target: str | Path | IO[str]) -> None:
    if hasattr(target, "write"):
        for event in events:
            target.write(json.dumps(_event_to_row(event)) + "\n")  # type: ignore[union-attr]
        return
    with open(target, "w") as handle:
        write_events_jsonl(events, handle)


def events_to_csv_text(events: Iterable[RawEvent]) -> str:
    buffer = io.StringIO()
    _write_csv_stream(events, buffer)
    return buffer.getvalue()
