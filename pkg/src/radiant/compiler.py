"""Lower a validated process into one detector spec per activity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

from radiant.iot_config import Band, Exact, IoTSystem, resolve_label
from radiant.lang.ast import ConditionType, Label, PatternKind, ProcessDecl
from radiant.lang.parser import has_errors
from radiant.lang.validate import validate

SPEC_VERSION = 1


class CompileError(Exception):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        errors = [d for d in self.diagnostics if d.severity == "error"]
        super().__init__(f"program has {len(errors)} validation error(s); first: {errors[0].message}")


@dataclass(frozen=True)
class CompiledCondition:
    station: str
    sensor: str
    predicate: ConditionType
    operands: tuple[Exact | Band, ...] = ()
    window_ms: int | None = None


@dataclass(frozen=True)
class CompiledPattern:
    kind: PatternKind
    cases: tuple[tuple[CompiledCondition, ...], ...]
    index: int = 0  # position among intermediates; 0 for start/end

    @property
    def conditions(self) -> list[CompiledCondition]:
        return [c for case in self.cases for c in case]


@dataclass(frozen=True)
class DetectorSpec:
    process: str
    activity: str
    stations: dict[str, str]  # station id -> source id, sorted by station id
    pattern_chain: tuple[CompiledPattern, ...]
    sensors: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def subscribed_stations(self) -> frozenset[str]:
        return frozenset(self.stations)

    @property
    def n_intermediates(self) -> int:
        return len(self.pattern_chain) - 2

    @property
    def filename(self) -> str:
        return f"{self.process}.{self.activity}.json"

    def to_dict(self) -> dict:
        return {
            "version": SPEC_VERSION,
            "process": self.process,
            "activity": self.activity,
            "stations": dict(self.stations),
            "sensors": {k: list(v) for k, v in self.sensors.items()},
            "pattern_chain": [_pattern_to_dict(p) for p in self.pattern_chain],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "DetectorSpec":
        if data.get("version") != SPEC_VERSION:
            raise ValueError(f"unsupported detector spec version {data.get('version')!r}")
        chain = tuple(_pattern_from_dict(p) for p in data["pattern_chain"])
        return cls(
            process=data["process"],
            activity=data["activity"],
            stations=dict(sorted(data["stations"].items())),
            pattern_chain=chain,
            sensors={k: tuple(v) for k, v in sorted(data.get("sensors", {}).items())},
        )

    @classmethod
    def from_json(cls, text: str) -> "DetectorSpec":
        return cls.from_dict(json.loads(text))


def _edge(x: float):
    return None if math.isinf(x) else x


def value_spec_to_dict(spec: Exact | Band) -> dict:
    if isinstance(spec, Exact):
        return {"exact": spec.value}
    return {"band": [_edge(spec.lo), _edge(spec.hi)]}


def value_spec_from_dict(data: dict) -> Exact | Band:
    if "exact" in data:
        return Exact(data["exact"])
    lo, hi = data["band"]
    return Band(-math.inf if lo is None else lo, math.inf if hi is None else hi)


def _condition_to_dict(c: CompiledCondition) -> dict:
    out = {
        "station": c.station,
        "sensor": c.sensor,
        "predicate": c.predicate.value,
        "operands": [value_spec_to_dict(o) for o in c.operands],
    }
    if c.window_ms is not None:
        out["window_ms"] = c.window_ms
    return out


def _pattern_to_dict(p: CompiledPattern) -> dict:
    return {
        "kind": p.kind.value,
        "index": p.index,
        "cases": [[_condition_to_dict(c) for c in case] for case in p.cases],
    }


def _pattern_from_dict(data: dict) -> CompiledPattern:
    cases = tuple(
        tuple(
            CompiledCondition(
                station=c["station"],
                sensor=c["sensor"],
                predicate=ConditionType(c["predicate"]),
                operands=tuple(value_spec_from_dict(o) for o in c["operands"]),
                window_ms=c.get("window_ms"),
            )
            for c in case
        )
        for case in data["cases"]
    )
    return CompiledPattern(PatternKind(data["kind"]), cases, data.get("index", 0))


def compile_process(proc: ProcessDecl, system: IoTSystem) -> list[DetectorSpec]:
    """Compile each activity into a self-contained detector, in program order.

    Raises :class:`CompileError` if validation reports any error.
    """
    diags = validate(proc, system)
    if has_errors(diags):
        raise CompileError(diags)
    return [_compile_activity(proc.name, activity, system) for activity in proc.activities]


def _compile_activity(process: str, activity, system: IoTSystem) -> DetectorSpec:
    def lower(pattern, index=0):
        cases = tuple(tuple(_compile_condition(c, system) for c in case.conditions) for case in pattern.cases)
        return CompiledPattern(pattern.kind, cases, index)

    chain = [lower(activity.start)]
    chain += [lower(p, k) for k, p in enumerate(activity.intermediates)]
    chain.append(lower(activity.end))

    stations: dict[str, str] = {}
    sensors: dict[str, set[str]] = {}
    for p in chain:
        for c in p.conditions:
            stations[c.station] = system.station(c.station).source
            sensors.setdefault(c.station, set()).add(c.sensor)
    return DetectorSpec(
        process=process,
        activity=activity.name,
        stations=dict(sorted(stations.items())),
        pattern_chain=tuple(chain),
        sensors={k: tuple(sorted(v)) for k, v in sorted(sensors.items())},
    )


def _compile_condition(cond, system: IoTSystem) -> CompiledCondition:
    sensor = system.sensor(cond.station, cond.sensor)
    operands = tuple(
        resolve_label(sensor, op.name) if isinstance(op, Label) else Exact(op.value) for op in cond.operands
    )
    window = cond.time_constraint.millis if cond.time_constraint is not None else None
    return CompiledCondition(cond.station, cond.sensor, cond.ctype, operands, window)


def display_name(identifier: str) -> str:
    """Human-facing activity name: underscores become spaces."""
    return identifier.replace("_", " ")
