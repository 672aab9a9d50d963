"""Session pipeline: cleaning, enrichment, compression, balancing, selection."""

from .cleaning import CleanConfig, CleanReport, clean
from .features import (
    RECORD_FIELDS,
    EnrichedEvent,
    SessionRecord,
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
from .selection import (
    CANDIDATE_FEATURES,
    FeatureCatalog,
    FeatureScore,
    UserSplit,
    balance_and_split,
    load_catalog,
    load_splits,
    save_catalog,
    save_splits,
    select_features,
)

__all__ = [
    "CleanConfig",
    "CleanReport",
    "clean",
    "RECORD_FIELDS",
    "EnrichedEvent",
    "SessionRecord",
    "build_popularity_index",
    "compress",
    "compute_engagement",
    "engineer",
    "positional_skew",
    "read_records_csv",
    "records_to_matrix",
    "session_play_time",
    "skewness",
    "write_records_csv",
    "CANDIDATE_FEATURES",
    "FeatureCatalog",
    "FeatureScore",
    "UserSplit",
    "balance_and_split",
    "load_catalog",
    "load_splits",
    "save_catalog",
    "save_splits",
    "select_features",
]
