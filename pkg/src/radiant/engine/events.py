from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone

_TS = re.compile(r"^(\d{4})-(\d{2})-(\d{2})[ T](\d{2}):(\d{2}):(\d{2})(?:\.(\d{1,6}))?$")


class TimestampError(ValueError):
    pass


def parse_ts(text: str) -> int:
    """Parse ``YYYY-MM-DD HH:MM:SS[.f{1,6}]`` (UTC) into epoch milliseconds.

    Sub-millisecond digits are truncated.
    """
    m = _TS.match(text.strip()) if isinstance(text, str) else None
    if m is None:
        raise TimestampError(f"unparseable timestamp {text!r}")
    year, month, day, hour, minute, second = (int(g) for g in m.groups()[:6])
    frac = (m.group(7) or "").ljust(6, "0")
    try:
        dt = datetime(year, month, day, hour, minute, second, int(frac), tzinfo=timezone.utc)
    except ValueError as exc:
        raise TimestampError(f"invalid timestamp {text!r}: {exc}") from None
    return int(dt.timestamp()) * 1000 + dt.microsecond // 1000


def format_ts(ms: int) -> str:
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%d %H:%M:%S") + f".{ms % 1000:03d}"


def iso_ts(ms: int) -> str:
    dt = datetime.fromtimestamp(ms // 1000, tz=timezone.utc)
    return dt.strftime("%Y-%m-%dT%H:%M:%S") + f".{ms % 1000:03d}+00:00"


@dataclass(frozen=True)
class SensorEvent:
    id: str
    station: str
    ts: int
    values: dict[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class PatternEvent:
    kind: str  # StartPattern | IntermediatePattern | EndPattern
    process: str
    activity: str
    ts: int
    index: int = 0

    def to_dict(self) -> dict:
        out = {"event": self.kind, "process": self.process, "activity": self.activity, "ts": format_ts(self.ts)}
        if self.kind == "IntermediatePattern":
            out["index"] = self.index
        return out


@dataclass(frozen=True)
class ActivityDetection:
    process: str
    activity: str
    ts_start: int
    ts_end: int

    def to_dict(self) -> dict:
        return {
            "process": self.process,
            "activity": self.activity,
            "ts_start": format_ts(self.ts_start),
            "ts_end": format_ts(self.ts_end),
        }
