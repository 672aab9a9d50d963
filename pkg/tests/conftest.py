"""Shared fixtures: one synthetic corpus and one trained model set per session.

Training is the expensive part (~30 s), so anything that can share these
fixtures should; tests that need different corpora build their own small ones.
"""

from __future__ import annotations

import pytest

from streamtwin.events import group_sessions
from streamtwin.synth import SynthConfig, generate_corpus
from streamtwin.workflow import process, train_all

TWO_ARCHETYPES = {"stall_sensitive": 0.5, "bitrate_sensitive": 0.5}


@pytest.fixture(scope="session")
def small_corpus():
    """Six users, two archetypes: events, ground-truth sessions, users."""
    config = SynthConfig(
        n_users=6,
        sessions_per_user=300,
        seed=7,
        archetype_mix=TWO_ARCHETYPES,
        n_videos=14,
    )
    events, truths, users = generate_corpus(config)
    return config, events, truths, users


@pytest.fixture(scope="session")
def small_sessions(small_corpus):
    _, events, _, _ = small_corpus
    return group_sessions(events)


@pytest.fixture(scope="session")
def small_data(small_sessions):
    """ProcessedData for the shared corpus (cleaned, balanced, selected)."""
    return process(small_sessions, seed=3, threshold=0.02)


@pytest.fixture(scope="session")
def small_models(small_data):
    """TrainedModels (twins + unified + benchmark) for the shared corpus."""
    return train_all(small_data.records, small_data.splits, small_data.catalog, seed=3)
