"""Synthetic population with known sensitivity ground truth.

Each archetype weights four penalty families (stall, bitrate, duration,
popularity); a session's engagement is 1 minus the weighted penalties plus
gaussian noise, clamped, and the emitted events realize exactly that label
(the quit position) and those penalties (stall totals, bitrate level, video
choice). Generated corpora are constructed to pass every cleaning rule and to
cover all ten engagement bins, so the full pipeline runs on them unchanged.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigurationError
from .events import RawEvent
from .util import rng_from

__all__ = [
    "ARCHETYPES",
    "FEATURE_FAMILIES",
    "SynthConfig",
    "GroundTruthUser",
    "SessionTruth",
    "generate_population",
    "generate_sessions",
    "generate_corpus",
    "family_of_feature",
    "family_weights",
    "cosine_similarity",
]

FAMILIES = ("stall", "bitrate", "duration", "popularity")

# Non-dominant popularity gets a reduced share: a high popularity penalty
# means a rarely-watched video, so sessions carrying it are rare by
# construction and weighting it like the other families starves the lowest
# engagement bin that balancing needs filled.
ARCHETYPES: dict[str, dict[str, float]] = {
    "stall_sensitive": {"stall": 0.7, "bitrate": 0.13, "duration": 0.13, "popularity": 0.04},
    "bitrate_sensitive": {"stall": 0.13, "bitrate": 0.7, "duration": 0.13, "popularity": 0.04},
    "duration_sensitive": {"stall": 0.13, "bitrate": 0.13, "duration": 0.7, "popularity": 0.04},
    "popularity_driven": {"stall": 0.1, "bitrate": 0.1, "duration": 0.1, "popularity": 0.7},
    "mixed": {"stall": 0.25, "bitrate": 0.25, "duration": 0.25, "popularity": 0.25},
}

# Which compressed-record features carry each penalty family's signal.
FEATURE_FAMILIES: dict[str, tuple[str, ...]] = {
    "stall": ("stall_count", "stall_duration_mean", "stall_duration_std", "stall_duration_skew"),
    "bitrate": ("bitrate_mean", "bitrate_std", "switch_count", "switch_magnitude_mean", "switch_skew"),
    "duration": ("video_duration",),
    "popularity": ("popularity",),
}

# Fixed normalization ranges mapping raw conditions to [0, 1] penalties.
STALL_TOTAL_MAX_S = 60.0
BITRATE_MIN_KBPS = 400.0
BITRATE_MAX_KBPS = 6400.0
MIN_WATCH_S = 12.0

_BASE_EPOCH_MS = 1_685_577_600_000  # 2023-06-01T00:00:00Z


@dataclass(frozen=True)
class SynthConfig:
    n_users: int
    sessions_per_user: int
    seed: int
    archetype_mix: Mapping[str, float] = field(
        default_factory=lambda: {"stall_sensitive": 0.5, "bitrate_sensitive": 0.5}
    )
    n_videos: int = 20
    duration_range: tuple[float, float] = (180.0, 2400.0)
    noise_sd: float = 0.05

    def validate(self) -> None:
        if self.n_users < 1:
            raise ConfigurationError("n_users must be >= 1")
        if self.sessions_per_user < 100:
            raise ConfigurationError(
                "sessions_per_user must be >= 100 so balancing and the per-user "
                f"session floor keep every user, got {self.sessions_per_user}"
            )
        if self.n_videos < 6:
            raise ConfigurationError("n_videos must be >= 6 to spread durations and popularity")
        unknown = set(self.archetype_mix) - set(ARCHETYPES)
        if unknown:
            raise ConfigurationError(f"unknown archetype(s): {sorted(unknown)}")
        total = sum(self.archetype_mix.values())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ConfigurationError(f"archetype_mix must sum to 1, got {total}")
        lo, hi = self.duration_range
        if not 60.0 < lo < hi:
            raise ConfigurationError(f"duration_range must satisfy 60 < lo < hi, got {self.duration_range}")
        if self.noise_sd < 0:
            raise ConfigurationError("noise_sd must be >= 0")


@dataclass(frozen=True)
class GroundTruthUser:
    user_id: str
    archetype: str
    latent_weights: dict[str, float]
    device_class: str


@dataclass(frozen=True)
class SessionTruth:
    user_id: str
    session_id: str
    video_id: str
    engagement: float
    penalties: dict[str, float]


@dataclass(frozen=True)
class _Video:
    video_id: str
    duration: float
    weight: float


def _videos(config: SynthConfig) -> list[_Video]:
    lo, hi = config.duration_range
    durations = np.linspace(lo, hi, config.n_videos)
    weights = np.arange(1, config.n_videos + 1, dtype=np.float64) ** 1.5
    weights /= weights.sum()
    # Interleave durations so popularity rank and duration are not aligned;
    # the stride must be coprime with n_videos to keep this a permutation.
    stride = next(
        s
        for s in range(max(config.n_videos // 2, 1), 0, -1)
        if math.gcd(s, config.n_videos) == 1
    )
    order = [(i * stride) % config.n_videos for i in range(config.n_videos)]
    return [
        _Video(video_id=f"v{i:03d}", duration=float(durations[order[i]]), weight=float(weights[i]))
        for i in range(config.n_videos)
    ]


def generate_population(config: SynthConfig) -> list[GroundTruthUser]:
    """Users with archetype counts by largest remainder, seeded device classes."""
    config.validate()
    names = sorted(config.archetype_mix)
    exact = {a: config.archetype_mix[a] * config.n_users for a in names}
    counts = {a: int(exact[a]) for a in names}
    leftover = config.n_users - sum(counts.values())
    for a in sorted(names, key=lambda a: (-(exact[a] - counts[a]), a)):
        if leftover <= 0:
            break
        counts[a] += 1
        leftover -= 1

    rng = rng_from(config.seed, 0x0D)
    devices = ("phone", "tablet", "laptop", "desktop", "tv")
    users: list[GroundTruthUser] = []
    i = 0
    for archetype in names:
        for _ in range(counts[archetype]):
            users.append(
                GroundTruthUser(
                    user_id=f"u{i:04d}",
                    archetype=archetype,
                    latent_weights=dict(ARCHETYPES[archetype]),
                    device_class=str(rng.choice(devices)),
                )
            )
            i += 1
    return users


def _plan_videos(config: SynthConfig, users: Sequence[GroundTruthUser]) -> dict[str, list[int]]:
    """Pre-assign a video index to every (user, session) so realized corpus
    popularity is known before any session is emitted. Per-user repeats are
    capped under the bot rule's threshold."""
    videos = _videos(config)
    weights = np.array([v.weight for v in videos])
    rng = rng_from(config.seed, 0x11)
    cap = 100  # stay at or below the bot rule's repeat limit
    plan: dict[str, list[int]] = {}
    for user in users:
        counts = np.zeros(len(videos), dtype=int)
        chosen: list[int] = []
        for _ in range(config.sessions_per_user):
            for _attempt in range(16):
                idx = int(rng.choice(len(videos), p=weights))
                if counts[idx] < cap:
                    break
            else:
                idx = int(np.argmin(counts))
            counts[idx] += 1
            chosen.append(idx)
        plan[user.user_id] = chosen
    return plan


def _solve_penalties(
    u_target: float,
    fixed: float,
    w_stall: float,
    w_bitrate: float,
    rng: np.random.Generator,
) -> tuple[float, float]:
    """Pick (p_stall, p_bitrate) so the total weighted penalty tracks u_target."""
    r = min(max(u_target - fixed, 0.0), w_stall + w_bitrate)
    if w_stall <= 0.0 and w_bitrate <= 0.0:
        return 0.0, 0.0
    if w_stall <= 0.0:
        return 0.0, min(max(r / w_bitrate, 0.0), 1.0)
    if w_bitrate <= 0.0:
        return min(max(r / w_stall, 0.0), 1.0), 0.0
    lo = max(0.0, (r - w_bitrate) / w_stall)
    hi = min(1.0, r / w_stall)
    p_stall = lo + rng.uniform() * (hi - lo)
    p_bitrate = (r - w_stall * p_stall) / w_bitrate
    return p_stall, min(max(p_bitrate, 0.0), 1.0)


def generate_sessions(
    user: GroundTruthUser,
    config: SynthConfig,
    *,
    video_plan: Sequence[int] | None = None,
    popularity_counts: Mapping[str, int] | None = None,
    user_index: int | None = None,
) -> tuple[list[RawEvent], list[SessionTruth]]:
    """All sessions for one user: events plus the intended engagement labels.

    Without an explicit plan, videos are drawn here and penalty normalization
    uses expected corpus counts; `generate_corpus` passes realized counts so
    the popularity feature matches its penalty exactly.
    """
    config.validate()
    videos = _videos(config)
    total_sessions = config.n_users * config.sessions_per_user
    if popularity_counts is None:
        popularity_counts = {
            v.video_id: max(1, round(v.weight * total_sessions)) for v in videos
        }
    pop_norm = math.log1p(total_sessions)
    dur_lo, dur_hi = config.duration_range

    if user_index is None:
        user_index = zlib.crc32(user.user_id.encode())
    rng = rng_from(config.seed, 0x5E, user_index)
    if video_plan is None:
        weights = np.array([v.weight for v in videos])
        video_plan = [int(rng.choice(len(videos), p=weights)) for _ in range(config.sessions_per_user)]

    w = user.latent_weights
    events: list[RawEvent] = []
    truths: list[SessionTruth] = []
    for s_idx in range(config.sessions_per_user):
        video = videos[video_plan[s_idx]]
        p_duration = (video.duration - dur_lo) / (dur_hi - dur_lo)
        p_popularity = 1.0 - math.log1p(popularity_counts.get(video.video_id, 0)) / pop_norm
        fixed = w["duration"] * p_duration + w["popularity"] * p_popularity

        # Target engagement spreads over this video's feasible band, with
        # extra mass on both band edges (complete-or-bail behavior), so the
        # corpus fills all ten engagement bins; stall/bitrate penalties are
        # then solved to realize the target exactly.
        floor = MIN_WATCH_S / video.duration
        band_hi = 1.0 - fixed
        band_lo = min(max(band_hi - (w["stall"] + w["bitrate"]), floor), band_hi)
        width = band_hi - band_lo
        mode = rng.uniform()
        if mode < 0.12:
            e_target = float(rng.uniform(band_lo, min(band_lo + 0.08, band_hi)))
        elif mode < 0.24:
            e_target = float(rng.uniform(band_hi - 0.1 * width, band_hi))
        else:
            e_target = float(rng.uniform(band_lo, band_hi))
        p_stall, p_bitrate = _solve_penalties(
            1.0 - e_target, fixed, w["stall"], w["bitrate"], rng
        )

        total_penalty = fixed + w["stall"] * p_stall + w["bitrate"] * p_bitrate
        raw = 1.0 - total_penalty + rng.normal(0.0, config.noise_sd)
        engagement = min(1.0, max(raw, floor))

        session_id = f"{user.user_id}-s{s_idx:04d}"
        truths.append(
            SessionTruth(
                user_id=user.user_id,
                session_id=session_id,
                video_id=video.video_id,
                engagement=engagement,
                penalties={
                    "stall": p_stall,
                    "bitrate": p_bitrate,
                    "duration": p_duration,
                    "popularity": p_popularity,
                },
            )
        )
        events.extend(
            _emit_session(user, session_id, video, engagement, p_stall, p_bitrate, rng)
        )
    return events, truths


def _emit_session(
    user: GroundTruthUser,
    session_id: str,
    video: _Video,
    engagement: float,
    p_stall: float,
    p_bitrate: float,
    rng: np.random.Generator,
) -> list[RawEvent]:
    watched = engagement * video.duration
    start_ms = (
        _BASE_EPOCH_MS
        + int(rng.integers(0, 364)) * 86_400_000
        + int(rng.integers(0, 86_400)) * 1000
    )
    latency = int(rng.integers(20, 120))
    bitrate = BITRATE_MAX_KBPS - p_bitrate * (BITRATE_MAX_KBPS - BITRATE_MIN_KBPS)
    startup_delay = float(rng.uniform(0.2, 4.0))

    def make(event_type: str, client_ms: int, **kw: object) -> RawEvent:
        return RawEvent(
            client_time=client_ms,
            server_time=client_ms + latency,
            user_id=user.user_id,
            video_id=video.video_id,
            session_id=session_id,
            event_type=event_type,
            device_class=user.device_class,
            cdn="cdn-a",
            video_duration=video.duration,
            **kw,  # type: ignore[arg-type]
        )

    events = [make("startup", start_ms, event_duration=startup_delay, bitrate=bitrate)]
    play_ms = start_ms + int(startup_delay * 1000) + 1
    events.append(make("play", play_ms, videotime_start=0.0))

    # In-playback items sorted by content position; stalls/pauses push wall time.
    items: list[tuple[float, int, str, dict[str, object]]] = []
    order = 0

    stall_total = p_stall * STALL_TOTAL_MAX_S
    if stall_total >= 0.3:
        n_stalls = 1 + min(5, int(stall_total // 12.0) + int(rng.integers(0, 2)))
        shares = rng.uniform(0.7, 1.3, size=n_stalls)
        shares /= shares.sum()
        positions = np.sort(rng.uniform(0.05, 0.95, size=n_stalls)) * watched
        for pos, share in zip(positions, shares):
            items.append(
                (float(pos), (order := order + 1), "stall",
                 {"event_duration": float(stall_total * share),
                  "videotime_start": float(pos), "videotime_end": float(pos)})
            )

    current_bitrate = bitrate
    for _ in range(int(rng.integers(0, 3))):
        pos = float(rng.uniform(0.1, 0.9) * watched)
        delta = float(rng.uniform(200.0, 800.0)) * (1 if rng.uniform() < 0.5 else -1)
        new_bitrate = min(BITRATE_MAX_KBPS, max(BITRATE_MIN_KBPS, current_bitrate + delta))
        items.append(
            (pos, (order := order + 1), "bitrate_switch",
             {"bitrate": new_bitrate, "videotime_start": pos})
        )
        current_bitrate = new_bitrate

    for _ in range(int(rng.integers(0, 3))):
        pos = float(rng.uniform(0.05, 0.95) * watched)
        items.append(
            (pos, (order := order + 1), "pause",
             {"event_duration": float(rng.uniform(2.0, 30.0)), "videotime_start": pos})
        )

    if rng.uniform() < 0.3:
        pos = float(rng.uniform(0.05, 0.95) * watched)
        items.append((pos, (order := order + 1), "seek", {"videotime_start": pos}))

    n_heartbeats = 8
    seg = watched / n_heartbeats
    running = bitrate
    switch_positions = sorted(
        (pos, kw["bitrate"]) for pos, _, kind, kw in items if kind == "bitrate_switch"
    )
    for j in range(n_heartbeats):
        while switch_positions and switch_positions[0][0] <= j * seg:
            running = float(switch_positions.pop(0)[1])  # type: ignore[arg-type]
        items.append(
            ((j + 1) * seg, (order := order + 1), "heartbeat",
             {"event_duration": seg, "videotime_start": j * seg,
              "videotime_end": (j + 1) * seg, "bitrate": running})
        )

    items.sort(key=lambda it: (it[0], it[1]))
    wall_extra_ms = 0
    last_ms = play_ms
    for pos, _, kind, kw in items:
        client_ms = play_ms + int(pos * 1000) + wall_extra_ms
        if client_ms <= last_ms:
            client_ms = last_ms + 1
        events.append(make(kind, client_ms, **kw))
        last_ms = client_ms
        if kind in ("stall", "pause"):
            wall_extra_ms += int(float(kw["event_duration"]) * 1000)  # type: ignore[arg-type]

    quit_ms = max(last_ms + 1, play_ms + int(watched * 1000) + wall_extra_ms)
    events.append(make("quit", quit_ms, videotime_end=watched))
    return events


def generate_corpus(
    config: SynthConfig,
) -> tuple[list[RawEvent], list[SessionTruth], list[GroundTruthUser]]:
    """Full population with realized-popularity-exact penalties."""
    users = generate_population(config)
    plan = _plan_videos(config, users)
    videos = _videos(config)
    counts: dict[str, int] = {v.video_id: 0 for v in videos}
    for chosen in plan.values():
        for idx in chosen:
            counts[videos[idx].video_id] += 1

    events: list[RawEvent] = []
    truths: list[SessionTruth] = []
    for user_index, user in enumerate(users):
        user_events, user_truths = generate_sessions(
            user,
            config,
            video_plan=plan[user.user_id],
            popularity_counts=counts,
            user_index=user_index,
        )
        events.extend(user_events)
        truths.extend(user_truths)
    return events, truths, users


def family_of_feature(name: str) -> str | None:
    for family, names in FEATURE_FAMILIES.items():
        if name in names:
            return family
    return None


def family_weights(weights: Mapping[str, float]) -> dict[str, float]:
    """Collapse per-feature weights onto the four penalty families."""
    out = {family: 0.0 for family in FAMILIES}
    for name, value in weights.items():
        family = family_of_feature(name)
        if family is not None:
            out[family] += value
    return out


def cosine_similarity(a: Mapping[str, float], b: Mapping[str, float]) -> float:
    keys = sorted(set(a) | set(b))
    va = np.array([a.get(k, 0.0) for k in keys])
    vb = np.array([b.get(k, 0.0) for k in keys])
    denom = float(np.linalg.norm(va) * np.linalg.norm(vb))
    return float(va @ vb / denom) if denom > 0 else 0.0
