"""Discrete-event playback simulator producing raw session event logs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import ConfigurationError
from ..events import RawEvent
from .traces import BandwidthTrace

__all__ = [
    "ABR_POLICIES",
    "DEFAULT_LADDER",
    "STARTUP_TARGET_SEGMENTS",
    "MAX_BUFFER_S",
    "WhatIfScenario",
    "SimulationSummary",
    "simulate_session",
]

ABR_POLICIES = ("throughput", "buffer", "hybrid-low-latency")

DEFAULT_LADDER: tuple[tuple[float, str], ...] = (
    (400.0, "360p"),
    (800.0, "480p"),
    (1600.0, "720p"),
    (3200.0, "1080p"),
    (6400.0, "1440p"),
)

STARTUP_TARGET_SEGMENTS = 2
MAX_BUFFER_S = 30.0

# Fixed wall-clock origin for simulated sessions, so time-of-day derived
# features are constant across scenarios and never contribute to deltas.
_SIM_EPOCH_MS = 1_700_000_000_000


@dataclass(frozen=True)
class WhatIfScenario:
    """One streaming configuration to simulate and score."""

    trace: str
    abr: str = "hybrid-low-latency"
    segment_size: float = 2.0
    video_duration: float = 600.0
    ladder: tuple[tuple[float, str], ...] = DEFAULT_LADDER
    n_sessions: int = 10
    cohort: tuple[str, ...] | str = "random:10"
    seed: int = 0
    name: str | None = None

    def validate(self) -> None:
        if self.segment_size not in (1, 2):
            raise ConfigurationError(
                f"segment_size must be 1 or 2 seconds, got {self.segment_size}"
            )
        if self.abr not in ABR_POLICIES:
            raise ConfigurationError(
                f"abr must be one of {', '.join(ABR_POLICIES)}, got {self.abr!r}"
            )
        if self.video_duration <= 0:
            raise ConfigurationError(f"video_duration must be positive, got {self.video_duration}")
        if not self.ladder:
            raise ConfigurationError("ladder must have at least one rung")
        bitrates = [b for b, _ in self.ladder]
        if any(b <= 0 for b in bitrates):
            raise ConfigurationError("ladder bitrates must be positive")
        if any(b2 <= b1 for b1, b2 in zip(bitrates, bitrates[1:])):
            raise ConfigurationError("ladder bitrates must be strictly increasing")
        if self.n_sessions < 1:
            raise ConfigurationError(f"n_sessions must be >= 1, got {self.n_sessions}")

    def label(self, index: int) -> str:
        if self.name:
            return self.name
        return f"scenario-{index}"


@dataclass
class SimulationSummary:
    """Audit counters for one simulated session."""

    startup_delay_s: float
    playback_s: float
    total_stall_s: float
    wall_s: float
    n_stalls: int
    n_switches: int
    rungs: list[int] = field(default_factory=list)


def _choose_rung(
    policy: str,
    bitrates: Sequence[float],
    throughputs: Sequence[float],
    buffer_s: float,
    current: int,
) -> int:
    if not throughputs:
        return 0
    if policy == "buffer":
        slot = MAX_BUFFER_S / len(bitrates)
        return min(int(buffer_s / slot), len(bitrates) - 1)
    recent = throughputs[-3:]
    harmonic = len(recent) / sum(1.0 / x for x in recent)
    rung = 0
    for i, bitrate in enumerate(bitrates):
        if bitrate <= harmonic:
            rung = i
    if policy == "hybrid-low-latency":
        rung = min(rung, current + 1)
    return rung


def simulate_session(
    scenario: WhatIfScenario,
    trace: BandwidthTrace,
    seed: int | np.random.SeedSequence,
    *,
    user_id: str = "whatif-user",
    session_id: str = "whatif-session",
    video_id: str = "whatif-video",
) -> tuple[list[RawEvent], SimulationSummary]:
    """Play one video through the scenario's ABR over the trace.

    Segments download sequentially; the buffer fills by one segment per
    completed download and drains in real time once playback starts (at
    STARTUP_TARGET_SEGMENTS buffered, or when everything is downloaded).
    An empty buffer mid-download is a stall lasting until that download
    completes. Per-download bandwidth jitter is multiplicative U[0.9, 1.1]
    from the session's own generator, so equal seeds replay exactly.
    """
    scenario.validate()
    rng = np.random.Generator(np.random.PCG64(seed))
    bitrates = [b for b, _ in scenario.ladder]
    seg = float(scenario.segment_size)
    duration = float(scenario.video_duration)
    n_segments = max(1, math.ceil(duration / seg))
    startup_target = STARTUP_TARGET_SEGMENTS * seg

    latency_ms = int(rng.uniform(20.0, 120.0))
    # (wall_seconds, order, event_type, field overrides)
    staged: list[tuple[float, int, str, dict[str, float | None]]] = []
    order = 0

    def stage(wall_s: float, event_type: str, **fields: float | None) -> None:
        nonlocal order
        staged.append((wall_s, order, event_type, fields))
        order += 1

    t = 0.0
    buffer = 0.0
    played = 0.0
    playing = False
    startup_delay = 0.0
    total_stall = 0.0
    n_stalls = 0
    n_switches = 0
    current_rung = 0
    throughputs: list[float] = []
    rungs: list[int] = []

    for i in range(n_segments):
        rung = _choose_rung(scenario.abr, bitrates, throughputs, buffer, current_rung)
        if i > 0 and rung != current_rung:
            stage(
                t,
                "bitrate_switch",
                bitrate=bitrates[rung],
                videotime_start=played,
                videotime_end=played,
            )
            n_switches += 1
        current_rung = rung
        rungs.append(rung)

        media = min(seg, duration - i * seg)
        if playing and buffer + media > MAX_BUFFER_S:
            drain = buffer + media - MAX_BUFFER_S
            played += drain
            buffer -= drain
            t += drain

        kbits = media * bitrates[rung]
        jitter = float(rng.uniform(0.9, 1.1))
        download_s = trace.time_to_download(t, kbits / jitter)

        if playing:
            if buffer >= download_s:
                buffer -= download_s
                played += download_s
            else:
                stall_start = t + buffer
                stall_position = played + buffer
                stall_duration = download_s - buffer
                played += buffer
                buffer = 0.0
                total_stall += stall_duration
                n_stalls += 1
                stage(
                    stall_start,
                    "stall",
                    event_duration=stall_duration,
                    videotime_start=stall_position,
                    videotime_end=stall_position,
                )
        t += download_s
        buffer += media
        throughputs.append(kbits / download_s if download_s > 0 else float("inf"))
        stage(
            t,
            "heartbeat",
            bitrate=bitrates[rung],
            event_duration=media,
            videotime_start=i * seg,
            videotime_end=i * seg + media,
        )

        if not playing and (buffer >= startup_target or i == n_segments - 1):
            playing = True
            startup_delay = t
            stage(t, "startup", event_duration=startup_delay, bitrate=bitrates[current_rung])
            stage(t, "play", videotime_start=0.0)

    # Everything downloaded: the remaining buffer plays out in real time.
    played += buffer
    t += buffer
    buffer = 0.0
    stage(t, "quit", videotime_end=duration)

    staged.sort(key=lambda item: (item[0], item[1]))
    events: list[RawEvent] = []
    last_ms = -1
    for wall_s, _, event_type, fields in staged:
        client = _SIM_EPOCH_MS + int(round(wall_s * 1000.0))
        if client <= last_ms:
            client = last_ms + 1
        last_ms = client
        events.append(
            RawEvent(
                client_time=client,
                server_time=client + latency_ms,
                user_id=user_id,
                video_id=video_id,
                session_id=session_id,
                event_type=event_type,
                device_class="unknown",
                cdn="sim",
                video_duration=duration,
                **fields,  # type: ignore[arg-type]
            )
        )
    summary = SimulationSummary(
        startup_delay_s=startup_delay,
        playback_s=played,
        total_stall_s=total_stall,
        wall_s=t,
        n_stalls=n_stalls,
        n_switches=n_switches,
        rungs=rungs,
    )
    return events, summary
