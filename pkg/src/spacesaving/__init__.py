"""Mergeable Space Saving summaries and a data-parallel frequent-items engine."""

from .engine import Decomposition, RunConfig, RunResult, TimingBreakdown, decompose, run, run_hybrid, run_parallel
from .errors import (
    ConfigurationError,
    IncompatibleSummariesError,
    InvalidCapacityError,
    InvalidUniverseError,
    InvalidWorkersError,
    SpaceSavingError,
    StreamParseError,
    UndefinedMetricError,
)
from .evaluation import (
    AccuracyReport,
    ExactCounts,
    average_relative_error,
    evaluate,
    exact_count,
    precision_recall,
    relative_error,
)
from .merge import combine, prune_threshold
from .summary import Counter, StreamSummary, new_summary

__all__ = [
    "AccuracyReport",
    "ConfigurationError",
    "Counter",
    "Decomposition",
    "ExactCounts",
    "IncompatibleSummariesError",
    "InvalidCapacityError",
    "InvalidUniverseError",
    "InvalidWorkersError",
    "RunConfig",
    "RunResult",
    "SpaceSavingError",
    "StreamParseError",
    "StreamSummary",
    "TimingBreakdown",
    "UndefinedMetricError",
    "average_relative_error",
    "combine",
    "decompose",
    "evaluate",
    "exact_count",
    "new_summary",
    "precision_recall",
    "prune_threshold",
    "relative_error",
    "run",
    "run_hybrid",
    "run_parallel",
]
