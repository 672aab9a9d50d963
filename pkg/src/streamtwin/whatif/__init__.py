"""What-if simulation: bandwidth traces, an ABR playback simulator, a cohort
scoring engine over the unified engagement model, and an HTTP service."""

from .engine import (
    ScenarioOutcome,
    UnknownTraceError,
    UnknownUserError,
    WhatIfResult,
    reference_grid,
    resolve_cohort,
    result_table,
    run_whatif,
)
from .simulator import (
    ABR_POLICIES,
    DEFAULT_LADDER,
    MAX_BUFFER_S,
    STARTUP_TARGET_SEGMENTS,
    SimulationSummary,
    WhatIfScenario,
    simulate_session,
)
from .traces import TRACE_HEADER, BandwidthTrace, builtin_traces, load_trace_csv

__all__ = [
    "ABR_POLICIES",
    "DEFAULT_LADDER",
    "MAX_BUFFER_S",
    "STARTUP_TARGET_SEGMENTS",
    "TRACE_HEADER",
    "BandwidthTrace",
    "SimulationSummary",
    "WhatIfScenario",
    "ScenarioOutcome",
    "WhatIfResult",
    "UnknownTraceError",
    "UnknownUserError",
    "builtin_traces",
    "load_trace_csv",
    "simulate_session",
    "resolve_cohort",
    "run_whatif",
    "reference_grid",
    "result_table",
]
