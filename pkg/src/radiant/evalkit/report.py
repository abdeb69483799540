"""Per-activity scoring, micro/macro aggregation and report files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import reduce
from operator import add
from statistics import fmean

from radiant.engine.events import format_ts
from radiant.evalkit.counting import (
    EventCounts,
    FrameCounts,
    Scores,
    event_analysis,
    segment_and_count,
    standard_scores,
)
from radiant.evalkit.intervals import IntervalLog, LogError
from radiant.evalkit.signals import Correlation, cross_correlation, damerau_levenshtein_norm, rasterize

MODES = ("micro", "macro")
DIGITS = 6


@dataclass
class ActivityResult:
    activity: str
    frames: FrameCounts
    events: EventCounts
    two_set: Scores
    event_analysis: Scores
    xcorr: Correlation
    gt_frames: int
    dl_norm: float

    def to_dict(self, frame_ms: int) -> dict:
        return {
            "activity": self.activity,
            "two_set": self.two_set.to_dict(),
            "event_analysis": self.event_analysis.to_dict(),
            "cross_correlation": {
                "score": self.xcorr.score,
                "lag_ms": self.xcorr.lag * frame_ms,
                "undefined": self.xcorr.undefined,
            },
            "damerau_levenshtein_norm": self.dl_norm,
            "frame_counts_ms": self.frames.to_dict(),
            "event_counts": self.events.to_dict(),
            "gt_frames": self.gt_frames,
        }


@dataclass
class MetricsReport:
    mode: str
    frame_ms: int
    max_lag_ms: int | None
    bounds: tuple[int, int]
    per_activity: list[ActivityResult]
    two_set: Scores
    event_analysis: Scores
    cross_correlation: float
    damerau_levenshtein_norm: float
    frames: FrameCounts | None = None
    events: EventCounts | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        overall = {
            "two_set": self.two_set.to_dict(),
            "event_analysis": self.event_analysis.to_dict(),
            "cross_correlation": self.cross_correlation,
            "damerau_levenshtein_norm": self.damerau_levenshtein_norm,
        }
        if self.frames is not None:
            overall["frame_counts_ms"] = self.frames.to_dict()
            overall["event_counts"] = self.events.to_dict()
        return _rounded(
            {
                "aggregation": self.mode,
                "frame_ms": self.frame_ms,
                "max_lag_ms": self.max_lag_ms,
                "cross_correlation_micro_weighting": "gt_frames",
                "timeline": {"start": format_ts(self.bounds[0]), "end": format_ts(self.bounds[1])},
                "overall": overall,
                "per_activity": [r.to_dict(self.frame_ms) for r in self.per_activity],
                "warnings": list(self.warnings),
            }
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _rounded(obj):
    if isinstance(obj, float):
        return round(obj, DIGITS)
    if isinstance(obj, dict):
        return {k: _rounded(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_rounded(v) for v in obj]
    return obj


def shared_bounds(gt: IntervalLog, det: IntervalLog) -> tuple[int, int]:
    spans = [b for b in (gt.bounds, det.bounds) if b is not None]
    if not spans:
        raise LogError("both logs are empty; nothing to score")
    return min(s[0] for s in spans), max(s[1] for s in spans)


def score_activity(
    gt: IntervalLog,
    det: IntervalLog,
    activity: str,
    bounds: tuple[int, int],
    frame_ms: int = 100,
    max_lag_ms: int | None = None,
) -> ActivityResult:
    frames = segment_and_count(gt, det, activity, bounds)
    events = event_analysis(gt, det, activity)
    g = rasterize(gt.of(activity), bounds, frame_ms)
    d = rasterize(det.of(activity), bounds, frame_ms)
    max_lag = None if max_lag_ms is None else max_lag_ms // frame_ms
    return ActivityResult(
        activity=activity,
        frames=frames,
        events=events,
        two_set=standard_scores(frames),
        event_analysis=standard_scores(events),
        xcorr=cross_correlation(g, d, max_lag),
        gt_frames=int(g.sum()),
        dl_norm=damerau_levenshtein_norm([activity] * events.n_gt, [activity] * events.n_det),
    )


def _mean_scores(items: list[Scores], with_ba: bool) -> Scores:
    undefined = sorted({name for s in items for name in s.undefined})
    return Scores(
        fmean(s.precision for s in items),
        fmean(s.recall for s in items),
        fmean(s.f1 for s in items),
        fmean(s.balanced_accuracy for s in items) if with_ba else None,
        tuple(undefined),
    )


def aggregate(
    results: list[ActivityResult],
    mode: str,
    gt: IntervalLog,
    det: IntervalLog,
    bounds: tuple[int, int],
    frame_ms: int,
    max_lag_ms: int | None = None,
) -> MetricsReport:
    """Combine per-activity results.

    Micro sums the counts before scoring, weights cross-correlation by each
    activity's ground-truth frames and edits the interleaved sequences.
    Macro takes unweighted means of the per-activity scores.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if not results:
        raise LogError("no activity to score")
    warnings = list(gt.warnings) + list(det.warnings)
    if mode == "micro":
        frames = reduce(add, (r.frames for r in results))
        events = reduce(add, (r.events for r in results))
        mass = sum(r.gt_frames for r in results)
        if mass:
            xc = sum(r.xcorr.score * r.gt_frames for r in results) / mass
        else:
            xc = 0.0
            warnings.append("cross-correlation undefined: ground truth covers no frame")
        return MetricsReport(
            mode,
            frame_ms,
            max_lag_ms,
            bounds,
            results,
            standard_scores(frames),
            standard_scores(events),
            xc,
            damerau_levenshtein_norm(gt.sequence(), det.sequence()),
            frames,
            events,
            warnings,
        )
    return MetricsReport(
        mode,
        frame_ms,
        max_lag_ms,
        bounds,
        results,
        _mean_scores([r.two_set for r in results], True),
        _mean_scores([r.event_analysis for r in results], False),
        fmean(r.xcorr.score for r in results),
        fmean(r.dl_norm for r in results),
        warnings=warnings,
    )


def evaluate(
    gt: IntervalLog,
    det: IntervalLog,
    frame_ms: int = 100,
    mode: str = "micro",
    max_lag_ms: int | None = None,
) -> MetricsReport:
    """Score ``det`` against ``gt`` on the union of both logs' extents."""
    if frame_ms <= 0:
        raise ValueError("frame_ms must be positive")
    bounds = shared_bounds(gt, det)
    activities = sorted(set(gt.activities) | set(det.activities))
    results = [score_activity(gt, det, a, bounds, frame_ms, max_lag_ms) for a in activities]
    return aggregate(results, mode, gt, det, bounds, frame_ms, max_lag_ms)


CSV_COLUMNS = (
    "activity",
    "ts_precision",
    "ts_recall",
    "ts_f1",
    "ts_balanced_accuracy",
    "ea_precision",
    "ea_recall",
    "ea_f1",
    "cross_correlation",
    "xcorr_lag_ms",
    "dl_norm",
    "tp_ms",
    "tn_ms",
    "fp_insertion_ms",
    "fp_merge_ms",
    "fp_overfill_ms",
    "fn_deletion_ms",
    "fn_fragmentation_ms",
    "fn_underfill_ms",
    "gt_events",
    "det_events",
)


def _row(name, ts: Scores, ea: Scores, xc, lag, dl, frames: FrameCounts | None, events: EventCounts | None):
    row = [name, ts.precision, ts.recall, ts.f1, ts.balanced_accuracy, ea.precision, ea.recall, ea.f1, xc, lag, dl]
    if frames is None:
        row += [""] * 10
    else:
        row += [
            frames.tp,
            frames.tn,
            frames.insertion,
            frames.merge,
            frames.overfill,
            frames.deletion,
            frames.fragmentation,
            frames.underfill,
            events.n_gt,
            events.n_det,
        ]
    return [round(x, DIGITS) if isinstance(x, float) else x for x in row]


def report_csv(report: MetricsReport) -> str:
    """Per-activity table with one aggregate row, ready for plotting."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in report.per_activity:
        w.writerow(
            _row(
                r.activity,
                r.two_set,
                r.event_analysis,
                r.xcorr.score,
                r.xcorr.lag * report.frame_ms,
                r.dl_norm,
                r.frames,
                r.events,
            )
        )
    w.writerow(
        _row(
            f"ALL ({report.mode})",
            report.two_set,
            report.event_analysis,
            report.cross_correlation,
            "",
            report.damerau_levenshtein_norm,
            report.frames,
            report.events,
        )
    )
    return buf.getvalue()


def render_table(report: MetricsReport) -> str:
    """Fixed-width summary for terminals."""
    head = f"{'activity':<24} {'TS P':>7} {'TS R':>7} {'TS F1':>7} {'TS BA':>7} {'EA P':>7} {'EA R':>7} {'EA F1':>7} {'XCorr':>7} {'DL':>7}"
    lines = [head, "-" * len(head)]

    def line(name, ts, ea, xc, dl):
        vals = [ts.precision, ts.recall, ts.f1, ts.balanced_accuracy, ea.precision, ea.recall, ea.f1, xc, dl]
        return f"{name:<24} " + " ".join(f"{v:7.4f}" for v in vals)

    for r in report.per_activity:
        lines.append(line(r.activity, r.two_set, r.event_analysis, r.xcorr.score, r.dl_norm))
    lines.append("-" * len(head))
    lines.append(
        line(
            f"ALL ({report.mode})",
            report.two_set,
            report.event_analysis,
            report.cross_correlation,
            report.damerau_levenshtein_norm,
        )
    )
    return "\n".join(lines) + "\n"
