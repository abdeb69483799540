"""Decode sensor payloads, replay event files and merge station streams."""

from __future__ import annotations

import heapq
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

from radiant.engine.events import SensorEvent, TimestampError, parse_ts
from radiant.iot_config import SourceDecl

log = logging.getLogger(__name__)

RESERVED_FIELDS = ("id", "station", "ts")


class IngestError(Exception):
    pass


class OrderError(IngestError):
    pass


@dataclass
class IngestStats:
    lines: int = 0
    events: int = 0
    malformed: int = 0
    missing_fields: int = 0
    bad_values: int = 0
    out_of_order: int = 0
    unknown_fields: set[str] = field(default_factory=set)

    def warnings(self) -> dict[str, int]:
        return {
            "malformed_lines": self.malformed,
            "missing_fields": self.missing_fields,
            "bad_values": self.bad_values,
            "out_of_order_dropped": self.out_of_order,
            "unknown_fields": len(self.unknown_fields),
        }


def decode_payload(
    obj: Mapping,
    source: SourceDecl,
    station: str | None = None,
    stats: IngestStats | None = None,
    where: str = "payload",
) -> SensorEvent:
    """Map one JSON object onto a :class:`SensorEvent` using the source schema.

    Raises :class:`IngestError` when ``ts`` is missing or unparseable; any
    other schema mismatch only counts a warning.
    """
    stats = stats if stats is not None else IngestStats()
    if "ts" not in obj:
        raise IngestError(f"{where}: missing 'ts'")
    try:
        ts = parse_ts(obj["ts"])
    except TimestampError as exc:
        raise IngestError(f"{where}: {exc}") from None

    station = obj.get("station", station)
    if station is None:
        raise IngestError(f"{where}: no station in payload and none bound to the input")
    values: dict[str, float] = {}
    for name, ftype in source.schema.items():
        if name == "ts" or ftype == "string":
            continue
        if name not in obj:
            stats.missing_fields += 1
            log.debug("%s: field %r missing", where, name)
            continue
        value = obj[name]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            stats.bad_values += 1
            log.warning("%s: field %r is not numeric (%r); ignored", where, name, value)
            continue
        values[name] = value
    for name in obj:
        if name not in source.schema and name not in RESERVED_FIELDS and name not in stats.unknown_fields:
            stats.unknown_fields.add(name)
            log.warning("field %r is not in the schema of source %r; ignoring it", name, source.id)
    stats.events += 1
    return SensorEvent(str(obj.get("id", f"{station}@{ts}")), str(station), ts, values)


def ingest_file(
    path,
    source: SourceDecl,
    station: str | None = None,
    stats: IngestStats | None = None,
    speed: float | None = None,
) -> Iterator[SensorEvent]:
    """Yield events of a line-delimited JSON file in file order.

    Malformed lines are skipped and counted.  With ``speed`` set, the
    generator sleeps so that event gaps are replayed at ``speed`` times real
    time.
    """
    stats = stats if stats is not None else IngestStats()

    def events():
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                stats.lines += 1
                try:
                    obj = json.loads(line)
                except json.JSONDecodeError:
                    stats.malformed += 1
                    log.warning("%s:%d: malformed JSON line skipped", path, lineno)
                    continue
                if not isinstance(obj, dict):
                    stats.malformed += 1
                    log.warning("%s:%d: line is not a JSON object; skipped", path, lineno)
                    continue
                yield decode_payload(obj, source, station, stats, where=f"{path}:{lineno}")

    return pace(events(), speed) if speed else events()


def pace(events: Iterable[SensorEvent], speed: float) -> Iterator[SensorEvent]:
    """Replay with wall-clock delays equal to event gaps divided by ``speed``."""
    if speed <= 0:
        raise ValueError("speed must be positive")
    first_ts = None
    started = 0.0
    for ev in events:
        if first_ts is None:
            first_ts, started = ev.ts, time.monotonic()
        else:
            due = started + (ev.ts - first_ts) / 1000.0 / speed
            delay = due - time.monotonic()
            if delay > 0:
                time.sleep(delay)
        yield ev


def enforce_order(
    events: Iterable[SensorEvent], policy: str = "drop", stats: IngestStats | None = None
) -> Iterator[SensorEvent]:
    """Filter timestamp regressions per station.

    ``policy`` is ``"drop"`` (skip and count) or ``"abort"`` (raise
    :class:`OrderError`).
    """
    if policy not in ("drop", "abort"):
        raise ValueError(f"unknown order policy {policy!r}")
    stats = stats if stats is not None else IngestStats()
    last: dict[str, int] = {}
    for ev in events:
        prev = last.get(ev.station)
        if prev is not None and ev.ts < prev:
            if policy == "abort":
                raise OrderError(f"station {ev.station}: timestamp went back from {prev} to {ev.ts} (event {ev.id})")
            stats.out_of_order += 1
            log.warning("station %s: event %s out of order (%d < %d); dropped", ev.station, ev.id, ev.ts, prev)
            continue
        last[ev.station] = ev.ts
        yield ev


def merge_streams(
    streams: Mapping[str, Iterable[SensorEvent]], policy: str = "drop", stats: IngestStats | None = None
) -> Iterator[SensorEvent]:
    """Merge per-station streams into one timeline ordered by ``ts``.

    Ties go to the lexicographically smaller station id, then to arrival
    order within a station.
    """
    stats = stats if stats is not None else IngestStats()

    def keyed(key, events):
        for seq, ev in enumerate(enforce_order(events, policy, stats)):
            yield (ev.ts, ev.station, key, seq), ev

    ordered = [keyed(key, streams[key]) for key in sorted(streams)]
    for _, ev in heapq.merge(*ordered, key=lambda pair: pair[0]):
        yield ev
