"""Cyclic piecewise-constant bandwidth traces driving the session simulator."""

from __future__ import annotations

import bisect
import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO

from ..errors import ConfigurationError, SchemaError

__all__ = ["BandwidthTrace", "load_trace_csv", "builtin_traces", "TRACE_HEADER"]

TRACE_HEADER = ("duration_s", "bandwidth_kbps")


@dataclass(frozen=True)
class BandwidthTrace:
    """A repeating sequence of (duration, bandwidth) steps."""

    name: str
    durations_s: tuple[float, ...]
    bandwidths_kbps: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.durations_s or len(self.durations_s) != len(self.bandwidths_kbps):
            raise ConfigurationError(
                f"trace {self.name!r} needs matching non-empty duration/bandwidth steps"
            )
        if any(d <= 0 for d in self.durations_s):
            raise ConfigurationError(f"trace {self.name!r} has a non-positive step duration")
        if any(b <= 0 for b in self.bandwidths_kbps):
            raise ConfigurationError(f"trace {self.name!r} has a non-positive bandwidth")
        ends: list[float] = []
        total = 0.0
        for d in self.durations_s:
            total += d
            ends.append(total)
        object.__setattr__(self, "_step_ends", tuple(ends))

    @property
    def cycle_s(self) -> float:
        return self._step_ends[-1]  # type: ignore[attr-defined]

    def _step_index(self, position: float) -> int:
        ends: tuple[float, ...] = self._step_ends  # type: ignore[attr-defined]
        index = bisect.bisect_right(ends, position)
        return 0 if index >= len(ends) else index

    def bandwidth_at(self, t_s: float) -> float:
        """Bandwidth in kbps at wall time t, with the trace repeating forever."""
        position = math.fmod(t_s, self.cycle_s)
        if position < 0 or position >= self.cycle_s:
            position = 0.0
        return self.bandwidths_kbps[self._step_index(position)]

    def time_to_download(self, start_s: float, kbits: float) -> float:
        """Seconds to move `kbits` starting at `start_s`, integrating the steps.

        The loop walks step indices rather than accumulating wall-clock time:
        re-deriving the position with fmod can get stuck when the remainder of
        a step is smaller than one ulp of the running clock.
        """
        if kbits <= 0:
            return 0.0
        ends: tuple[float, ...] = self._step_ends  # type: ignore[attr-defined]
        position = math.fmod(start_s, self.cycle_s)
        if position < 0 or position >= self.cycle_s:
            position = 0.0
        index = self._step_index(position)
        remaining = kbits
        elapsed = 0.0
        while True:
            bandwidth = self.bandwidths_kbps[index]
            span = max(ends[index] - position, 0.0)
            capacity = bandwidth * span
            if capacity >= remaining:
                return elapsed + remaining / bandwidth
            remaining -= capacity
            elapsed += span
            index += 1
            if index >= len(ends):
                index = 0
                position = 0.0
            else:
                position = ends[index - 1]

    def scaled(self, factor: float) -> "BandwidthTrace":
        """The same shape with every bandwidth multiplied by `factor`."""
        if factor <= 0:
            raise ConfigurationError(f"scale factor must be positive, got {factor}")
        return BandwidthTrace(
            name=f"{self.name}*{factor:g}",
            durations_s=self.durations_s,
            bandwidths_kbps=tuple(b * factor for b in self.bandwidths_kbps),
        )


def load_trace_csv(source: str | Path | IO[str], name: str) -> BandwidthTrace:
    """Parse a `duration_s,bandwidth_kbps` CSV into a trace."""
    if hasattr(source, "read"):
        return _parse(source, name)  # type: ignore[arg-type]
    with open(source, "r", newline="") as handle:
        return _parse(handle, name)


def _parse(handle: IO[str], name: str) -> BandwidthTrace:
    reader = csv.reader(handle)
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"trace {name!r} is empty") from None
    if tuple(h.strip() for h in header) != TRACE_HEADER:
        raise SchemaError(
            f"trace {name!r} must start with header {','.join(TRACE_HEADER)!r}, got {header}"
        )
    durations: list[float] = []
    bandwidths: list[float] = []
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != 2:
            raise SchemaError(f"trace {name!r} line {line_no}: expected 2 columns, got {len(row)}")
        try:
            durations.append(float(row[0]))
            bandwidths.append(float(row[1]))
        except ValueError:
            raise SchemaError(f"trace {name!r} line {line_no}: non-numeric value in {row}") from None
    return BandwidthTrace(name=name, durations_s=tuple(durations), bandwidths_kbps=tuple(bandwidths))


def builtin_traces() -> dict[str, BandwidthTrace]:
    """The bundled presets, keyed by file stem."""
    from importlib import resources

    out: dict[str, BandwidthTrace] = {}
    trace_dir = resources.files(__package__) / "traces"
    for entry in sorted(trace_dir.iterdir(), key=lambda item: item.name):
        if entry.name.endswith(".csv"):
            stem = entry.name[: -len(".csv")]
            with entry.open("r", newline="") as handle:
                out[stem] = _parse(handle, stem)
    return out
