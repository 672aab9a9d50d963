"""Feature engineering: engagement, skew statistics, session compression."""

from __future__ import annotations

import io
import math

import numpy as np
import pytest
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from streamtwin.errors import DroppableSession
from streamtwin.events import RawEvent, SessionKey
from streamtwin.pipeline.features import (
    SCREEN_SIZE,
    build_popularity_index,
    compress,
    compute_engagement,
    engineer,
    positional_skew,
    read_records_csv,
    records_to_matrix,
    session_play_time,
    skewness,
    write_records_csv,
)


def ev(t_ms: int, etype: str, **kw: object) -> RawEvent:
    base: dict[str, object] = dict(
        client_time=t_ms,
        server_time=t_ms + 40,
        user_id="u1",
        video_id="v1",
        session_id="s1",
        event_type=etype,
        device_class="tablet",
    )
    base.update(kw)
    return RawEvent(**base)  # type: ignore[arg-type]


# --- engagement ---------------------------------------------------------


def test_engagement_is_max_end_over_duration() -> None:
    events = [
        ev(0, "play", videotime_start=0.0, videotime_end=10.0, video_duration=100.0),
        ev(1000, "seek", videotime_start=50.0, videotime_end=30.0),
        ev(2000, "quit", videotime_end=42.0),
    ]
    assert compute_engagement(events) == pytest.approx(0.42)


def test_engagement_clamps_to_unit_interval() -> None:
    over = [ev(0, "quit", videotime_end=130.0, video_duration=100.0)]
    assert compute_engagement(over) == 1.0
    under = [ev(0, "quit", videotime_end=-5.0, video_duration=100.0)]
    assert compute_engagement(under) == 0.0


def test_engagement_duration_from_max_event_duration_field() -> None:
    events = [
        ev(0, "play", videotime_end=30.0, video_duration=50.0),
        ev(1000, "heartbeat", videotime_end=30.0, video_duration=60.0),
    ]
    assert compute_engagement(events) == pytest.approx(0.5)


def test_engagement_explicit_duration_wins() -> None:
    events = [ev(0, "quit", videotime_end=30.0, video_duration=60.0)]
    assert compute_engagement(events, video_duration=120.0) == pytest.approx(0.25)


def test_engagement_droppable_without_ends_or_duration() -> None:
    with pytest.raises(DroppableSession):
        compute_engagement([ev(0, "play", video_duration=10.0)])
    with pytest.raises(DroppableSession):
        compute_engagement([ev(0, "quit", videotime_end=3.0)])
    with pytest.raises(DroppableSession):
        compute_engagement([ev(0, "quit", videotime_end=3.0, video_duration=0.0)])


# --- skewness -----------------------------------------------------------


def brute_skew(samples: list[float], weights: list[float]) -> float | None:
    total = sum(weights)
    if len(samples) < 3 or total <= 0:
        return None
    mu = sum(w * x for w, x in zip(weights, samples)) / total
    m2 = sum(w * (x - mu) ** 2 for w, x in zip(weights, samples)) / total
    if m2 == 0:
        return None
    m3 = sum(w * (x - mu) ** 3 for w, x in zip(weights, samples)) / total
    return m3 / m2**1.5


def test_skewness_textbook_example() -> None:
    # {1,1,1,9}: biased g1 = 2/sqrt(3).
    assert skewness([1.0, 1.0, 1.0, 9.0]) == pytest.approx(2.0 / math.sqrt(3.0))


def test_skewness_matches_scipy_unweighted() -> None:
    rng = np.random.default_rng(0)
    for _ in range(20):
        x = rng.normal(size=int(rng.integers(3, 30))).tolist()
        assert skewness(x) == pytest.approx(scipy.stats.skew(np.array(x), bias=True), abs=1e-12)


def test_skewness_weighted_matches_brute_force() -> None:
    rng = np.random.default_rng(1)
    for _ in range(20):
        n = int(rng.integers(3, 20))
        x = rng.normal(size=n).tolist()
        w = rng.uniform(0.1, 3.0, size=n).tolist()
        assert skewness(x, w) == pytest.approx(brute_skew(x, w), abs=1e-12)


def test_skewness_weighted_replication_equivalence() -> None:
    # Integer weights must equal literal sample replication.
    x = [1.0, 2.0, 7.0]
    w = [2.0, 1.0, 3.0]
    replicated = [1.0, 1.0, 2.0, 7.0, 7.0, 7.0]
    assert skewness(x, w) == pytest.approx(skewness(replicated), abs=1e-12)


def test_skewness_degenerate_cases() -> None:
    assert skewness([1.0, 2.0]) is None
    assert skewness([3.0, 3.0, 3.0]) is None
    assert skewness([1.0, 2.0, 3.0], [0.0, 0.0, 0.0]) is None


def test_skewness_symmetry_antisymmetric() -> None:
    x = [0.0, 1.0, 1.0, 5.0]
    s = skewness(x)
    assert s is not None
    mirrored = [-v for v in x]
    assert skewness(mirrored) == pytest.approx(-s, abs=1e-12)


# --- positional skew ----------------------------------------------------


def test_positional_skew_early_mass_positive() -> None:
    s = positional_skew([5.0, 10.0, 15.0], [1.0, 1.0, 1.0], window=100.0)
    assert s is not None and s > 0


def test_positional_skew_late_mass_negative() -> None:
    s = positional_skew([85.0, 90.0, 95.0], [1.0, 1.0, 1.0], window=100.0)
    assert s is not None and s < 0


def test_positional_skew_symmetric_is_exactly_zero() -> None:
    s = positional_skew([10.0, 50.0, 90.0], [1.0, 2.0, 1.0], window=100.0)
    assert s == pytest.approx(0.0, abs=1e-12)


def test_positional_skew_first_vs_last_third_signs() -> None:
    rng = np.random.default_rng(2)
    for _ in range(15):
        n = int(rng.integers(3, 10))
        window = float(rng.uniform(50, 500))
        early = rng.uniform(0, window / 3, size=n).tolist()
        late = rng.uniform(2 * window / 3, window, size=n).tolist()
        w = rng.uniform(0.5, 2.0, size=n).tolist()
        s_early = positional_skew(early, w, window)
        s_late = positional_skew(late, w, window)
        assert s_early is None or s_early > 0
        assert s_late is None or s_late < 0


def test_positional_skew_mirror_antisymmetry() -> None:
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = int(rng.integers(3, 8))
        window = 200.0
        p = rng.uniform(0, window, size=n).tolist()
        w = rng.uniform(0.5, 2.0, size=n).tolist()
        s = positional_skew(p, w, window)
        mirrored = [window - v for v in p]
        s_m = positional_skew(mirrored, w, window)
        if s is None:
            assert s_m is None
        else:
            assert s_m == pytest.approx(-s, abs=1e-12)


def test_positional_skew_degenerate_cases() -> None:
    assert positional_skew([1.0, 2.0], [1.0, 1.0], window=10.0) is None
    assert positional_skew([1.0, 2.0, 3.0], [1.0, 1.0, 1.0], window=0.0) is None
    assert positional_skew([5.0, 5.0, 5.0], [1.0, 1.0, 1.0], window=10.0) is None  # all at midpoint
    assert positional_skew([1.0, 2.0, 3.0], [0.0, 0.0, 0.0], window=10.0) is None


# --- play time ----------------------------------------------------------


def test_play_time_sums_play_and_heartbeat_durations() -> None:
    events = [
        ev(0, "play", event_duration=4.0),
        ev(1000, "heartbeat", event_duration=4.0),
        ev(2000, "stall", event_duration=9.0),
        ev(3000, "heartbeat", event_duration=2.5),
    ]
    assert session_play_time(events) == pytest.approx(10.5)


def test_play_time_falls_back_to_videotime_span() -> None:
    events = [
        ev(0, "seek", videotime_start=10.0, videotime_end=40.0),
        ev(1000, "quit", videotime_end=55.0),
    ]
    assert session_play_time(events) == pytest.approx(45.0)
    assert session_play_time([ev(0, "quit", videotime_end=30.0)]) == pytest.approx(30.0)
    assert session_play_time([ev(0, "pause")]) == 0.0


# --- popularity / engineer ----------------------------------------------


def test_popularity_index_is_log1p_session_counts() -> None:
    sessions = {
        SessionKey("u1", "s1"): [ev(0, "play")],
        SessionKey("u1", "s2"): [ev(0, "play")],
        SessionKey("u2", "s3"): [ev(0, "play", video_id="v2")],
    }
    index = build_popularity_index(sessions)
    assert index["v1"] == pytest.approx(math.log(3.0))
    assert index["v2"] == pytest.approx(math.log(2.0))


def test_engineer_enriches_events() -> None:
    # 2021-01-01T13:00:00Z == 1609506000000 ms.
    t0 = 1_609_506_000_000
    events = [
        ev(t0, "play", bitrate=800.0),
        ev(t0 + 1000, "bitrate_switch", bitrate=1600.0),
        ev(t0 + 2000, "bitrate_switch", bitrate=400.0),
    ]
    sessions = {SessionKey("u1", "s1"): events}
    enriched = engineer(sessions, {"v1": 1.5})[SessionKey("u1", "s1")]
    assert [e.hour_of_day for e in enriched] == [13, 13, 13]
    assert enriched[0].latency_ms == 40
    assert enriched[0].popularity == 1.5
    assert enriched[0].screen_size == SCREEN_SIZE["tablet"]
    assert enriched[0].bitrate_delta is None  # play event, not a switch
    assert enriched[1].bitrate_delta == pytest.approx(800.0)
    assert enriched[2].bitrate_delta == pytest.approx(-1200.0)


def test_engineer_unknown_video_popularity_none() -> None:
    sessions = {SessionKey("u1", "s1"): [ev(0, "play", video_id="ghost")]}
    enriched = engineer(sessions, {"v1": 1.0})[SessionKey("u1", "s1")]
    assert enriched[0].popularity is None


# --- compress ------------------------------------------------------------


def build_session() -> list[RawEvent]:
    t0 = 1_609_506_000_000
    return [
        ev(t0, "startup", event_duration=1.5),
        ev(t0 + 1500, "play", bitrate=800.0, videotime_start=0.0, videotime_end=4.0,
           event_duration=4.0, video_duration=120.0),
        ev(t0 + 5500, "stall", videotime_start=4.0, event_duration=2.0),
        ev(t0 + 7500, "heartbeat", bitrate=800.0, videotime_start=4.0, videotime_end=8.0,
           event_duration=4.0, video_duration=120.0),
        ev(t0 + 11_500, "bitrate_switch", bitrate=1600.0, videotime_start=8.0),
        ev(t0 + 11_600, "heartbeat", bitrate=1600.0, videotime_start=8.0, videotime_end=12.0,
           event_duration=4.0, video_duration=120.0),
        ev(t0 + 15_600, "stall", videotime_start=12.0, event_duration=1.0),
        ev(t0 + 16_600, "pause"),
        ev(t0 + 17_600, "seek", videotime_start=12.0, videotime_end=30.0),
        ev(t0 + 18_600, "heartbeat", bitrate=1600.0, videotime_start=30.0, videotime_end=34.0,
           event_duration=4.0, video_duration=120.0),
        ev(t0 + 22_600, "quit", videotime_end=34.0),
    ]


def test_compress_full_session_record() -> None:
    key = SessionKey("u1", "s1")
    events = build_session()
    enriched = engineer({key: events}, {"v1": 2.0})[key]
    record = compress(key, enriched)

    assert record.user_id == "u1"
    assert record.session_id == "s1"
    assert record.hour_of_day == 13
    assert record.popularity == pytest.approx(2.0)
    assert record.screen_size == SCREEN_SIZE["tablet"]
    assert record.video_duration == pytest.approx(120.0)
    assert record.startup_delay == pytest.approx(1.5)
    assert record.play_time == pytest.approx(16.0)  # 4 heartbeats/play of 4 s
    assert record.stall_count == 2
    assert record.stall_duration_mean == pytest.approx(1.5)
    assert record.stall_duration_std == pytest.approx(0.5)
    # Only two stalls carry positions -> positional skew needs >= 3.
    assert record.stall_duration_skew is None
    assert record.bitrate_mean == pytest.approx(np.mean([800, 800, 1600, 1600, 1600]))
    assert record.bitrate_std == pytest.approx(np.std([800, 800, 1600, 1600, 1600]))
    assert record.switch_count == 1
    assert record.switch_magnitude_mean == pytest.approx(800.0)
    assert record.seek_count == 1
    assert record.pause_count == 1
    assert record.latency_mean == pytest.approx(40.0)
    assert record.engagement == pytest.approx(34.0 / 120.0)


def test_compress_engagement_override_skips_label_computation() -> None:
    key = SessionKey("u1", "s1")
    # Truncated view: no videotime_end at all -> label would be droppable.
    events = [ev(0, "startup", event_duration=0.5), ev(500, "stall", event_duration=1.0)]
    enriched = engineer({key: events}, {})[key]
    record = compress(key, enriched, engagement_override=0.77)
    assert record.engagement == pytest.approx(0.77)
    assert record.stall_count == 1
    with pytest.raises(DroppableSession):
        compress(key, enriched)  # without the override the label is unusable


def test_compress_empty_session_droppable() -> None:
    with pytest.raises(DroppableSession):
        compress(SessionKey("u1", "s1"), [])


# --- records persistence --------------------------------------------------


def test_records_csv_round_trip_exact(small_data) -> None:
    records = small_data.records[:50]
    buffer = io.StringIO()
    write_records_csv(records, buffer)
    back = read_records_csv(io.StringIO(buffer.getvalue()))
    assert back == records


def test_records_to_matrix_none_becomes_nan() -> None:
    key = SessionKey("u1", "s1")
    events = [ev(0, "quit", videotime_end=30.0, video_duration=60.0)]
    record = compress(key, engineer({key: events}, {})[key])
    X, y = records_to_matrix([record], ["stall_duration_mean", "video_duration"])
    assert np.isnan(X[0, 0])
    assert X[0, 1] == pytest.approx(60.0)
    assert y[0] == pytest.approx(0.5)


@settings(max_examples=40, deadline=None)
@given(
    samples=st.lists(st.floats(-50, 50, allow_nan=False), min_size=3, max_size=15),
    raw_weights=st.lists(st.floats(0.1, 5.0, allow_nan=False), min_size=15, max_size=15),
)
def test_skewness_property_matches_brute_force(samples, raw_weights) -> None:
    weights = raw_weights[: len(samples)]
    ours = skewness(samples, weights)
    expected = brute_skew(samples, weights)
    if expected is None:
        assert ours is None
    else:
        assert ours == pytest.approx(expected, abs=1e-9)
