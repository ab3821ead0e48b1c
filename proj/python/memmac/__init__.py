"""Adaptive MAC protocols with one-slot memory."""

from ._core import (
    BadParams,
    Error,
    ProtocolParams,
    ScenarioUnsatisfiable,
    SingularSystem,
    analyze,
    channel_utilization,
    contention_time,
    critical_delay,
    critical_eta,
    enhanced_critical_delay,
    estimate_metrics_oracle,
    maximize_utilization,
    run_experiment,
    solve_design_problem,
    stationary_distribution,
    summarize_two_critical,
    sweep,
)

__all__ = [
    "BadParams",
    "Error",
    "ProtocolParams",
    "ScenarioUnsatisfiable",
    "SingularSystem",
    "analyze",
    "channel_utilization",
    "contention_time",
    "critical_delay",
    "critical_eta",
    "enhanced_critical_delay",
    "estimate_metrics_oracle",
    "maximize_utilization",
    "run_experiment",
    "solve_design_problem",
    "stationary_distribution",
    "summarize_two_critical",
    "sweep",
]
