"""Duration-weighted segment counts, whole-event analysis and their scores."""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field, fields

from radiant.evalkit.intervals import Interval, IntervalLog


@dataclass
class FrameCounts:
    """Milliseconds of each classification for one activity (or summed)."""

    tp: int = 0
    tn: int = 0
    insertion: int = 0
    merge: int = 0
    overfill: int = 0
    deletion: int = 0
    fragmentation: int = 0
    underfill: int = 0

    @property
    def fp(self) -> int:
        return self.insertion + self.merge + self.overfill

    @property
    def fn(self) -> int:
        return self.deletion + self.fragmentation + self.underfill

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def __add__(self, other: "FrameCounts") -> "FrameCounts":
        return FrameCounts(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))

    def to_dict(self) -> dict:
        return {
            "tp": self.tp,
            "tn": self.tn,
            "fp": self.fp,
            "fn": self.fn,
            "fp_insertion": self.insertion,
            "fp_merge": self.merge,
            "fp_overfill": self.overfill,
            "fn_deletion": self.deletion,
            "fn_fragmentation": self.fragmentation,
            "fn_underfill": self.underfill,
        }


GT_CLASSES = ("correct", "deleted", "fragmented", "merged", "fragmented_and_merged")
DET_CLASSES = ("correct", "inserted", "fragmenting", "merging", "fragmenting_and_merging")


@dataclass
class EventCounts:
    gt: dict[str, int] = field(default_factory=lambda: dict.fromkeys(GT_CLASSES, 0))
    det: dict[str, int] = field(default_factory=lambda: dict.fromkeys(DET_CLASSES, 0))

    @property
    def n_gt(self) -> int:
        return sum(self.gt.values())

    @property
    def n_det(self) -> int:
        return sum(self.det.values())

    def __add__(self, other: "EventCounts") -> "EventCounts":
        return EventCounts(
            {k: self.gt[k] + other.gt[k] for k in GT_CLASSES},
            {k: self.det[k] + other.det[k] for k in DET_CLASSES},
        )

    def to_dict(self) -> dict:
        return {"gt": dict(self.gt), "det": dict(self.det)}


@dataclass
class Scores:
    precision: float
    recall: float
    f1: float
    balanced_accuracy: float | None = None
    undefined: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        out = {"precision": self.precision, "recall": self.recall, "f1": self.f1}
        if self.balanced_accuracy is not None:
            out["balanced_accuracy"] = self.balanced_accuracy
        out["undefined"] = list(self.undefined)
        return out


def _locate(items: list[Interval], t: float) -> int | None:
    """Index of the interval containing ``t``; ``items`` sorted, non-overlapping."""
    i = bisect.bisect_right([x.start for x in items], t) - 1
    if i >= 0 and items[i].start <= t < items[i].end:
        return i
    return None


def segment_and_count(gt: IntervalLog, det: IntervalLog, activity: str, bounds: tuple[int, int]) -> FrameCounts:
    """Partition ``bounds`` at every boundary and classify each segment.

    False-positive time inside a detection is a merge when the detection
    has true-positive time on both sides of it, an overfill when on one
    side only, and an insertion when the detection hits no ground truth.
    False negatives mirror this per ground-truth interval: fragmentation,
    underfill and deletion.
    """
    t0, t1 = bounds
    g, d = gt.of(activity), det.of(activity)
    cuts = sorted({t0, t1, *(x for iv in g + d for x in (iv.start, iv.end) if t0 < x < t1)})
    segs = []
    for a, b in zip(cuts, cuts[1:]):
        mid = (a + b) / 2
        segs.append((a, b, _locate(g, mid), _locate(d, mid)))

    # For each interval, the extent of its true-positive time.
    tp_span_g: dict[int, tuple[int, int]] = {}
    tp_span_d: dict[int, tuple[int, int]] = {}
    for a, b, gi, di in segs:
        if gi is not None and di is not None:
            for spans, key in ((tp_span_g, gi), (tp_span_d, di)):
                lo, hi = spans.get(key, (a, b))
                spans[key] = (min(lo, a), max(hi, b))

    counts = FrameCounts()
    for a, b, gi, di in segs:
        w = b - a
        if gi is not None and di is not None:
            counts.tp += w
        elif gi is None and di is None:
            counts.tn += w
        elif di is not None:
            span = tp_span_d.get(di)
            if span is None:
                counts.insertion += w
            elif span[0] < a and b < span[1]:
                counts.merge += w
            else:
                counts.overfill += w
        else:
            span = tp_span_g.get(gi)
            if span is None:
                counts.deletion += w
            elif span[0] < a and b < span[1]:
                counts.fragmentation += w
            else:
                counts.underfill += w
    return counts


def event_analysis(gt: IntervalLog, det: IntervalLog, activity: str) -> EventCounts:
    """Classify whole ground-truth intervals and detections by their overlaps."""
    g, d = gt.of(activity), det.of(activity)
    g_hits = [[j for j, y in enumerate(d) if x.overlaps(y)] for x in g]
    d_hits = [[i for i, x in enumerate(g) if x.overlaps(y)] for y in d]
    counts = EventCounts()
    for hits in g_hits:
        if not hits:
            counts.gt["deleted"] += 1
            continue
        fragmented = len(hits) >= 2
        merged = any(len(d_hits[j]) >= 2 for j in hits)
        key = {
            (False, False): "correct",
            (True, False): "fragmented",
            (False, True): "merged",
            (True, True): "fragmented_and_merged",
        }[(fragmented, merged)]
        counts.gt[key] += 1
    for hits in d_hits:
        if not hits:
            counts.det["inserted"] += 1
            continue
        merging = len(hits) >= 2
        fragmenting = any(len(g_hits[i]) >= 2 for i in hits)
        key = {
            (False, False): "correct",
            (True, False): "fragmenting",
            (False, True): "merging",
            (True, True): "fragmenting_and_merging",
        }[(fragmenting, merging)]
        counts.det[key] += 1
    return counts


def _ratio(num: float, den: float, name: str, undefined: list[str]) -> float:
    if den == 0:
        undefined.append(name)
        return 0.0
    return num / den


def standard_scores(counts: FrameCounts | EventCounts) -> Scores:
    """Precision, recall, F1, and balanced accuracy for frame counts.

    A 0/0 ratio scores 0 and is named in ``undefined``.
    """
    undefined: list[str] = []
    if isinstance(counts, EventCounts):
        p = _ratio(counts.det["correct"], counts.n_det, "precision", undefined)
        r = _ratio(counts.gt["correct"], counts.n_gt, "recall", undefined)
        ba = None
    else:
        p = _ratio(counts.tp, counts.tp + counts.fp, "precision", undefined)
        r = _ratio(counts.tp, counts.tp + counts.fn, "recall", undefined)
        spec = _ratio(counts.tn, counts.tn + counts.fp, "specificity", undefined)
        ba = (r + spec) / 2
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return Scores(p, r, f1, ba, tuple(undefined))
