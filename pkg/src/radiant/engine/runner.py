"""Drive detectors over a timeline and fan emissions out to sinks."""

from __future__ import annotations

import json
import logging
import sys
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

from radiant.compiler import DetectorSpec
from radiant.engine.detector import Detector
from radiant.engine.events import ActivityDetection, PatternEvent, SensorEvent
from radiant.engine.ingest import IngestStats, enforce_order, ingest_file, merge_streams, pace
from radiant.engine.xes import export_xes
from radiant.iot_config import IoTSystem, SinkDecl

log = logging.getLogger(__name__)


class RunError(Exception):
    pass


class Sink:
    name = "sink"

    def pattern(self, pe: PatternEvent) -> None:
        pass

    def detection(self, det: ActivityDetection) -> None:
        pass

    def close(self) -> None:
        pass


class MemorySink(Sink):
    name = "memory"

    def __init__(self):
        self.patterns: list[PatternEvent] = []
        self.detections: list[ActivityDetection] = []

    def pattern(self, pe):
        self.patterns.append(pe)

    def detection(self, det):
        self.detections.append(det)


class JsonlSink(Sink):
    """Line-delimited JSON of detections, or of pattern events with ``patterns=True``."""

    def __init__(self, target: str | IO[str], patterns: bool = False):
        self.name = str(target) if isinstance(target, str) else getattr(target, "name", "stream")
        self._own = isinstance(target, str)
        self.fh = open(target, "w", encoding="utf-8") if self._own else target
        self.patterns_only = patterns

    def _write(self, obj: dict) -> None:
        self.fh.write(json.dumps(obj) + "\n")

    def pattern(self, pe):
        if self.patterns_only:
            self._write(pe.to_dict())

    def detection(self, det):
        if not self.patterns_only:
            self._write(det.to_dict())

    def close(self):
        if self._own:
            self.fh.close()
        else:
            self.fh.flush()


class XesSink(Sink):
    """Collects detections and writes an XES log on close."""

    def __init__(self, path: str):
        self.name = path
        self.path = path
        self.detections: list[ActivityDetection] = []

    def detection(self, det):
        self.detections.append(det)

    def close(self):
        export_xes(self.detections, self.path)


class LogSink(Sink):
    name = "log"

    def detection(self, det):
        log.info("detected %s.%s %s", det.process, det.activity, json.dumps(det.to_dict()))


class MqttSink(Sink):
    def __init__(self, url: str, topic: str):
        from radiant.engine.mqtt import mqtt, parse_broker_url

        self.name = f"mqtt:{topic}"
        self.topic = topic
        host, port, tls = parse_broker_url(url)
        self.client = mqtt.Client(callback_api_version=mqtt.CallbackAPIVersion.VERSION2)
        if tls:
            self.client.tls_set()
        self.client.connect(host, port)
        self.client.loop_start()

    def detection(self, det):
        self.client.publish(self.topic, json.dumps(det.to_dict()), qos=1).wait_for_publish()

    def close(self):
        self.client.disconnect()
        self.client.loop_stop()


def sinks_from_config(decls: Sequence[SinkDecl]) -> list[Sink]:
    out: list[Sink] = []
    for decl in decls:
        if decl.type == "file":
            out.append(XesSink(decl.path) if decl.format == "xes" else JsonlSink(decl.path))
        elif decl.type == "log":
            out.append(LogSink())
        elif decl.type == "mqtt":
            out.append(MqttSink(decl.url, decl.topic))
    return out


@dataclass
class RunSummary:
    events: int = 0
    detections: int = 0
    pattern_events: int = 0
    per_activity: dict[str, int] = field(default_factory=dict)
    per_station: dict[str, int] = field(default_factory=dict)
    warnings: dict[str, int] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "events": self.events,
            "detections": self.detections,
            "pattern_events": self.pattern_events,
            "per_activity": dict(self.per_activity),
            "per_station": dict(sorted(self.per_station.items())),
            "warnings": dict(self.warnings),
        }


def run(
    specs: Sequence[DetectorSpec],
    timeline: Iterable[SensorEvent],
    sinks: Sequence[Sink] = (),
    stats: IngestStats | None = None,
) -> RunSummary:
    """Run every detector over the timeline; each sees only its own stations.

    Emissions at one event go out in detector order.  Sinks are closed even
    when the run is interrupted, so partial output is flushed.
    """
    detectors = [Detector(s) for s in specs]
    summary = RunSummary(per_activity={f"{s.process}.{s.activity}": 0 for s in specs})
    current = None

    def emit(kind, item):
        nonlocal current
        for sink in sinks:
            current = sink
            getattr(sink, kind)(item)

    try:
        for event in timeline:
            summary.events += 1
            summary.per_station[event.station] = summary.per_station.get(event.station, 0) + 1
            for det in detectors:
                if not det.accepts(event):
                    continue
                patterns, detections = det.feed(event)
                for pe in patterns:
                    summary.pattern_events += 1
                    emit("pattern", pe)
                for d in detections:
                    summary.detections += 1
                    summary.per_activity[f"{d.process}.{d.activity}"] += 1
                    emit("detection", d)
    except OSError as exc:
        name = getattr(current, "name", "sink")
        raise RunError(
            f"writing to {name} failed after {summary.detections} detection(s); output is partial: {exc}"
        ) from exc
    finally:
        for sink in sinks:
            try:
                sink.close()
            except OSError as exc:
                log.error("closing sink %s failed: %s", sink.name, exc)
    if stats is not None:
        summary.warnings = stats.warnings()
    return summary


def replay_timeline(
    system: IoTSystem,
    inputs: dict[str, list[str]],
    stats: IngestStats,
    speed: float | None = None,
    order_policy: str = "drop",
):
    """Merged timeline of replay files; ``inputs`` maps station id to paths."""
    streams = {}
    for station, paths in sorted(inputs.items()):
        st = system.station(station)
        if st is None:
            raise RunError(f"input given for unknown station {station!r}")
        source = system.source(st.source)

        def chained(paths=paths, source=source, station=station):
            for path in paths:
                yield from ingest_file(path, source, station, stats)

        streams[station] = chained()
    timeline = merge_streams(streams, order_policy, stats)
    return pace(timeline, speed) if speed else timeline


def live_timeline(
    system: IoTSystem,
    stations: Iterable[str],
    stats: IngestStats,
    broker: str | None = None,
    connect_deadline: float = 10.0,
    idle_timeout: float | None = None,
    max_events: int | None = None,
    order_policy: str = "drop",
):
    """Start MQTT subscriptions for ``stations``; returns (ingest, timeline)."""
    from radiant.engine.mqtt import MqttIngest

    bindings = []
    seen = set()
    for station in sorted(stations):
        st = system.station(station)
        source = system.source(st.source)
        if source.type != "mqtt":
            raise RunError(f"live mode needs an mqtt source for station {station}, got {source.type}")
        if source.id in seen:
            continue
        seen.add(source.id)
        sharing = [s.id for s in system.stations if s.source == source.id]
        bindings.append((source, sharing[0] if len(sharing) == 1 else None))
    ingest = MqttIngest(bindings, broker=broker, connect_deadline=connect_deadline, stats=stats).start()
    events = ingest.events(idle_timeout=idle_timeout, max_events=max_events)
    return ingest, enforce_order(events, order_policy, stats)


def write_summary(summary: RunSummary, fh: IO[str] | None = None) -> None:
    fh = fh if fh is not None else sys.stdout
    fh.write(json.dumps(summary.to_dict(), indent=2) + "\n")
