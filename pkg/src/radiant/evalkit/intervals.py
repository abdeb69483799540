"""Interval logs: detections or ground truth as (activity, start, end)."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

from radiant.engine.events import TimestampError, format_ts, parse_ts

log = logging.getLogger(__name__)


class LogError(ValueError):
    pass


class OverlapError(LogError):
    """Same-activity intervals overlap; ``offenders`` lists the pairs."""

    def __init__(self, offenders: list[tuple["Interval", "Interval"]], source: str = "log"):
        self.offenders = offenders
        lines = [f"{source}: {len(offenders)} overlapping same-activity interval pair(s)"]
        for a, b in offenders:
            lines.append(
                f"  {a.activity}: [{format_ts(a.start)}, {format_ts(a.end)}) overlaps "
                f"[{format_ts(b.start)}, {format_ts(b.end)})"
            )
        super().__init__("\n".join(lines))


@dataclass(frozen=True, order=True)
class Interval:
    start: int
    end: int
    activity: str

    def overlaps(self, other: "Interval") -> bool:
        return self.start < other.end and other.start < self.end


@dataclass
class IntervalLog:
    entries: list[Interval] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list, compare=False)

    def __post_init__(self):
        self.entries = sorted(self.entries)
        bad = [e for e in self.entries if not e.start < e.end]
        if bad:
            raise LogError(f"interval with ts_start >= ts_end: {bad[0]}")
        offenders = []
        for activity in self.activities:
            items = self.of(activity)
            offenders += [(a, b) for a, b in zip(items, items[1:]) if a.overlaps(b)]
        if offenders:
            raise OverlapError(offenders)

    @property
    def activities(self) -> list[str]:
        return sorted({e.activity for e in self.entries})

    @property
    def bounds(self) -> tuple[int, int] | None:
        if not self.entries:
            return None
        return min(e.start for e in self.entries), max(e.end for e in self.entries)

    def of(self, activity: str) -> list[Interval]:
        return [e for e in self.entries if e.activity == activity]

    def sequence(self) -> list[str]:
        """Activity labels ordered by start time."""
        return [e.activity for e in sorted(self.entries)]

    def __len__(self) -> int:
        return len(self.entries)


def _ms(value, where: str) -> int:
    if isinstance(value, bool):
        raise LogError(f"{where}: timestamp must be a string or milliseconds")
    if isinstance(value, (int, float)):
        return int(value)
    if isinstance(value, str):
        try:
            return parse_ts(value)
        except TimestampError as exc:
            raise LogError(f"{where}: {exc}") from None
    raise LogError(f"{where}: timestamp must be a string or milliseconds")


def intervals_from_records(records: Iterable[dict], source: str = "log") -> IntervalLog:
    """Build a log from ``{activity, ts_start, ts_end}`` records.

    Zero-length entries are dropped with a warning since they cover no time.
    """
    entries, warnings = [], []
    for i, rec in enumerate(records, start=1):
        where = f"{source}:{i}"
        try:
            activity = rec["activity"]
            start, end = _ms(rec["ts_start"], where), _ms(rec["ts_end"], where)
        except KeyError as exc:
            raise LogError(f"{where}: missing field {exc.args[0]!r}") from None
        if start == end:
            warnings.append(f"{where}: zero-length interval of {activity} skipped")
            continue
        if start > end:
            raise LogError(f"{where}: ts_start after ts_end")
        entries.append(Interval(start, end, str(activity)))
    for w in warnings:
        log.warning(w)
    try:
        return IntervalLog(entries, warnings)
    except OverlapError as exc:
        raise OverlapError(exc.offenders, source) from None


def load_intervals(path) -> IntervalLog:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise LogError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from None
    return intervals_from_records(records, str(path))
