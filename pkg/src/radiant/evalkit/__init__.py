from radiant.evalkit.counting import (
    EventCounts,
    FrameCounts,
    Scores,
    event_analysis,
    segment_and_count,
    standard_scores,
)
from radiant.evalkit.intervals import Interval, IntervalLog, LogError, OverlapError, intervals_from_records, load_intervals
from radiant.evalkit.report import (
    ActivityResult,
    MetricsReport,
    aggregate,
    evaluate,
    render_table,
    report_csv,
    score_activity,
    shared_bounds,
)
from radiant.evalkit.signals import (
    Correlation,
    cross_correlation,
    damerau_levenshtein,
    damerau_levenshtein_norm,
    rasterize,
)

__all__ = [
    "ActivityResult",
    "Correlation",
    "EventCounts",
    "FrameCounts",
    "Interval",
    "IntervalLog",
    "LogError",
    "MetricsReport",
    "OverlapError",
    "Scores",
    "aggregate",
    "cross_correlation",
    "damerau_levenshtein",
    "damerau_levenshtein_norm",
    "evaluate",
    "event_analysis",
    "intervals_from_records",
    "load_intervals",
    "rasterize",
    "render_table",
    "report_csv",
    "score_activity",
    "segment_and_count",
    "shared_bounds",
    "standard_scores",
]
