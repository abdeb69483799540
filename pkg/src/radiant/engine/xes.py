"""XES 1.0 event-log export of activity detections."""

from __future__ import annotations

import os
import xml.etree.ElementTree as ET
from typing import Iterable

from radiant.engine.events import ActivityDetection, iso_ts

EXTENSIONS = (
    ("Concept", "concept", "http://www.xes-standard.org/concept.xesext"),
    ("Lifecycle", "lifecycle", "http://www.xes-standard.org/lifecycle.xesext"),
    ("Time", "time", "http://www.xes-standard.org/time.xesext"),
)


def _attr(parent, tag: str, key: str, value: str):
    return ET.SubElement(parent, tag, {"key": key, "value": value})


def build_xes(detections: Iterable[ActivityDetection], trace_name: str | None = None) -> ET.ElementTree:
    """Build a log whose traces hold a start and a complete event per detection."""
    detections = list(detections)
    log = ET.Element("log", {"xes.version": "1.0", "xes.features": "nested-attributes"})
    for name, prefix, uri in EXTENSIONS:
        ET.SubElement(log, "extension", {"name": name, "prefix": prefix, "uri": uri})
    g_trace = ET.SubElement(log, "global", {"scope": "trace"})
    _attr(g_trace, "string", "concept:name", "__INVALID__")
    g_event = ET.SubElement(log, "global", {"scope": "event"})
    _attr(g_event, "string", "concept:name", "__INVALID__")
    _attr(g_event, "string", "lifecycle:transition", "complete")
    _attr(g_event, "date", "time:timestamp", "1970-01-01T00:00:00.000+00:00")
    ET.SubElement(log, "classifier", {"name": "Activity", "keys": "concept:name"})
    ET.SubElement(log, "classifier", {"name": "Activity lifecycle", "keys": "concept:name lifecycle:transition"})

    # One trace per process for this session; an empty session still gets one.
    by_process: dict[str, list[ActivityDetection]] = {}
    for det in detections:
        by_process.setdefault(det.process, []).append(det)
    if not by_process:
        by_process[trace_name or "session"] = []
    for process, dets in by_process.items():
        trace = ET.SubElement(log, "trace")
        _attr(trace, "string", "concept:name", process)
        rows = []
        for i, det in enumerate(dets):
            rows.append((det.ts_start, 0, i, det.activity, "start"))
            rows.append((det.ts_end, 1, i, det.activity, "complete"))
        rows.sort()
        for ts, _, _, activity, transition in rows:
            ev = ET.SubElement(trace, "event")
            _attr(ev, "string", "concept:name", activity)
            _attr(ev, "string", "lifecycle:transition", transition)
            _attr(ev, "date", "time:timestamp", iso_ts(ts))
    ET.indent(log)
    return ET.ElementTree(log)


def export_xes(detections: Iterable[ActivityDetection], path: str | os.PathLike, trace_name: str | None = None) -> None:
    tree = build_xes(detections, trace_name)
    with open(path, "wb") as fh:
        tree.write(fh, encoding="UTF-8", xml_declaration=True)
