from radiant.engine.conditions import SensorHistory, eval_condition, eval_instant
from radiant.engine.detector import Detector, DetectorState, advance_activity, step
from radiant.engine.events import ActivityDetection, PatternEvent, SensorEvent, format_ts, parse_ts
from radiant.engine.ingest import IngestError, IngestStats, OrderError, decode_payload, ingest_file, merge_streams
from radiant.engine.runner import (
    JsonlSink,
    MemorySink,
    RunError,
    RunSummary,
    Sink,
    XesSink,
    replay_timeline,
    run,
)
from radiant.engine.xes import build_xes, export_xes

__all__ = [
    "ActivityDetection",
    "Detector",
    "DetectorState",
    "IngestError",
    "IngestStats",
    "JsonlSink",
    "MemorySink",
    "OrderError",
    "PatternEvent",
    "RunError",
    "RunSummary",
    "SensorEvent",
    "SensorHistory",
    "Sink",
    "XesSink",
    "advance_activity",
    "build_xes",
    "decode_payload",
    "eval_condition",
    "eval_instant",
    "export_xes",
    "format_ts",
    "ingest_file",
    "merge_streams",
    "parse_ts",
    "replay_timeline",
    "run",
    "step",
]
