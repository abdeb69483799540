"""IoT system configuration: presets, stations, sensors, sources and sinks.

The configuration is a YAML document with top-level keys ``presets``,
``stations``, ``sources`` and optionally ``sinks``.  Parsing resolves presets
into the sensors that reference them, so every :class:`SensorDecl` carries its
effective states and bounds.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass, field, replace
from typing import Any, Mapping, Sequence

import yaml

SENSOR_KINDS = ("int", "float", "switch")
SOURCE_TYPES = ("mqtt", "file")
SINK_TYPES = ("file", "log", "mqtt")
FIELD_TYPES = ("string", "int", "float")
SWITCH_STATES = {"off": 0, "on": 1}

_ENV_VAR = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


class _Loader(yaml.SafeLoader):
    """Safe loader where only true/false are booleans, so ``on``/``off`` stay labels."""


_Loader.yaml_implicit_resolvers = {
    ch: [(tag, rx) for tag, rx in resolvers if tag != "tag:yaml.org,2002:bool"]
    for ch, resolvers in yaml.SafeLoader.yaml_implicit_resolvers.items()
}
_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:bool", re.compile(r"^(?:true|True|TRUE|false|False|FALSE)$"), list("tTfF")
)


class ConfigError(Exception):
    """Raised when a configuration document is invalid.

    ``issues`` holds ``(path, message)`` pairs, one per problem found.
    """

    def __init__(self, issues: Sequence[tuple[str, str]]):
        self.issues = list(issues)
        super().__init__("; ".join(f"{p}: {m}" if p else m for p, m in self.issues))


class LabelError(KeyError):
    def __init__(self, sensor: str, label: str, valid: Sequence[str]):
        self.sensor = sensor
        self.label = label
        self.valid = list(valid)
        super().__init__(label)

    def __str__(self) -> str:
        options = ", ".join(self.valid) if self.valid else "none configured"
        return f"unknown label {self.label!r} for sensor {self.sensor!r} (valid labels: {options})"


@dataclass(frozen=True)
class Exact:
    value: float

    def contains(self, x: float) -> bool:
        return x == self.value


@dataclass(frozen=True)
class Band:
    """Half-open value band ``[lo, hi)``; open ends use infinities."""

    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"band requires lo < hi, got [{self.lo}, {self.hi})")

    def contains(self, x: float) -> bool:
        return self.lo <= x < self.hi


ValueSpec = Exact | Band


@dataclass(frozen=True)
class Discretization:
    lower: tuple[float, str]
    intermediate: tuple[tuple[float, float, str], ...]
    upper: tuple[float, str]

    @property
    def labels(self) -> list[str]:
        return [self.lower[1], *(b[2] for b in self.intermediate), self.upper[1]]

    def bands(self) -> dict[str, Band]:
        out = {self.lower[1]: Band(-math.inf, self.lower[0])}
        for lo, hi, label in self.intermediate:
            out[label] = Band(lo, hi)
        out[self.upper[1]] = Band(self.upper[0], math.inf)
        return out

    def label_for(self, raw: float) -> str:
        if raw < self.lower[0]:
            return self.lower[1]
        for lo, hi, label in self.intermediate:
            if lo <= raw < hi:
                return label
        return self.upper[1]


@dataclass(frozen=True)
class Preset:
    id: str
    min_value: float | None = None
    max_value: float | None = None
    states: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class SensorDecl:
    id: str
    kind: str = "int"
    preset: str | None = None
    states: Mapping[str, float] = field(default_factory=dict)
    discretization: Discretization | None = None
    min_value: float | None = None
    max_value: float | None = None

    @property
    def labels(self) -> list[str]:
        labels = list(self.states)
        if self.discretization is not None:
            labels += [l for l in self.discretization.labels if l not in self.states]
        return labels


@dataclass(frozen=True)
class Station:
    id: str
    name: str
    source: str
    sensors: tuple[SensorDecl, ...]

    def sensor(self, sensor_id: str) -> SensorDecl | None:
        for s in self.sensors:
            if s.id == sensor_id:
                return s
        return None


@dataclass(frozen=True)
class SourceDecl:
    id: str
    type: str
    schema: Mapping[str, str]
    url: str | None = None
    url_template: str | None = None
    client_id: str | None = None
    topic: str | None = None
    content_type: str = "json"
    path: str | None = None


@dataclass(frozen=True)
class SinkDecl:
    id: str
    type: str
    path: str | None = None
    format: str = "jsonl"
    url: str | None = None
    topic: str | None = None


@dataclass(frozen=True)
class IoTSystem:
    presets: tuple[Preset, ...]
    stations: tuple[Station, ...]
    sources: tuple[SourceDecl, ...]
    sinks: tuple[SinkDecl, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def station(self, station_id: str) -> Station | None:
        for st in self.stations:
            if st.id == station_id:
                return st
        return None

    def source(self, source_id: str) -> SourceDecl | None:
        for src in self.sources:
            if src.id == source_id:
                return src
        return None

    def source_for(self, station_id: str) -> SourceDecl:
        st = self.station(station_id)
        if st is None:
            raise KeyError(station_id)
        return self.source(st.source)

    def sensor(self, station_id: str, sensor_id: str) -> SensorDecl | None:
        st = self.station(station_id)
        return st.sensor(sensor_id) if st else None


def resolve_label(sensor: SensorDecl, label: str) -> ValueSpec:
    """Resolve a state or discretization label of ``sensor`` to a value spec.

    States win over discretization bands when a label is defined as both.
    """
    if label in sensor.states:
        return Exact(sensor.states[label])
    if sensor.discretization is not None:
        band = sensor.discretization.bands().get(label)
        if band is not None:
            return band
    raise LabelError(sensor.id, label, sensor.labels)


def discretize(sensor: SensorDecl, raw: float) -> str | float:
    if sensor.discretization is None:
        return raw
    return sensor.discretization.label_for(raw)


def substitute_env(text: str, env: Mapping[str, str]) -> str:
    missing = [m.group(1) for m in _ENV_VAR.finditer(text) if m.group(1) not in env]
    if missing:
        raise KeyError(missing[0])
    return _ENV_VAR.sub(lambda m: env[m.group(1)], text)


def load_iot_config(
    path: str | os.PathLike, env: Mapping[str, str] | None = None, strict_env: bool = True
) -> IoTSystem:
    with open(path, encoding="utf-8") as fh:
        return parse_iot_config(fh.read(), env=env, strict_env=strict_env)


def parse_iot_config(text: str, env: Mapping[str, str] | None = None, strict_env: bool = True) -> IoTSystem:
    """Parse and validate a configuration document.

    ``env`` supplies ``${VAR}`` substitutions for source urls and paths and
    defaults to the process environment.  With ``strict_env`` off an
    unresolved variable is only a warning and leaves the value unset, which
    suits offline use such as checking or file replay.  All problems found
    are collected and raised together as one :class:`ConfigError`.
    """
    try:
        doc = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as exc:
        raise ConfigError([("", f"malformed document: {exc}")]) from exc
    if doc is None:
        doc = {}
    if not isinstance(doc, Mapping):
        raise ConfigError([("", "top level must be a mapping")])
    return _Parser(os.environ if env is None else env, strict_env).parse(doc)


def resolve_presets(system: IoTSystem) -> IoTSystem:
    """Apply presets to referencing sensors; local values win.

    Parsing already does this, and applying it again is a no-op.
    """
    presets = {p.id: p for p in system.presets}
    stations = []
    for st in system.stations:
        sensors = tuple(_apply_preset(s, presets.get(s.preset)) for s in st.sensors)
        stations.append(replace(st, sensors=sensors))
    return replace(system, stations=tuple(stations))


def _apply_preset(sensor: SensorDecl, preset: Preset | None) -> SensorDecl:
    states = dict(sensor.states)
    lo, hi = sensor.min_value, sensor.max_value
    if preset is not None:
        for k, v in preset.states.items():
            states.setdefault(k, v)
        lo = preset.min_value if lo is None else lo
        hi = preset.max_value if hi is None else hi
    if sensor.kind == "switch":
        for k, v in SWITCH_STATES.items():
            states.setdefault(k, v)
        lo = 0 if lo is None else lo
        hi = 1 if hi is None else hi
    return replace(sensor, states=states, min_value=lo, max_value=hi)


def _is_number(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool)


class _Parser:
    def __init__(self, env: Mapping[str, str], strict_env: bool = True):
        self.env = env
        self.strict_env = strict_env
        self.issues: list[tuple[str, str]] = []
        self.warnings: list[str] = []

    def error(self, path: str, msg: str) -> None:
        self.issues.append((path, msg))

    def parse(self, doc: Mapping[str, Any]) -> IoTSystem:
        unknown = set(doc) - {"presets", "stations", "sources", "sinks"}
        for key in sorted(unknown):
            self.warnings.append(f"{key}: unknown top-level key ignored")
        presets = self._list(doc, "presets", self._preset, "presets")
        stations = self._list(doc, "stations", self._station, "stations")
        sources = self._list(doc, "sources", self._source, "sources")
        sinks = self._list(doc, "sinks", self._sink, "sinks")

        if not stations and not any(p.startswith("stations") for p, _ in self.issues):
            self.error("stations", "at least one station required")
        self._unique(presets, "presets")
        self._unique(stations, "stations")
        self._unique(sources, "sources")
        self._unique(sinks, "sinks")

        preset_ids = {p.id for p in presets}
        source_ids = {s.id for s in sources}
        for i, st in enumerate(stations):
            if st.source not in source_ids:
                self.error(f"stations[{i}].source", f"unknown source {st.source!r}")
            for j, sensor in enumerate(st.sensors):
                if sensor.preset is not None and sensor.preset not in preset_ids:
                    self.error(f"stations[{i}].sensors[{j}].preset", f"unknown preset {sensor.preset!r}")

        if self.issues:
            raise ConfigError(self.issues)
        system = resolve_presets(IoTSystem(tuple(presets), tuple(stations), tuple(sources), tuple(sinks)))
        self._check_resolved(system)
        if self.issues:
            raise ConfigError(self.issues)
        return replace(system, warnings=tuple(self.warnings))

    def _list(self, doc, key, item_fn, path):
        raw = doc.get(key)
        if raw is None:
            return []
        if not isinstance(raw, list):
            self.error(path, "must be a list")
            return []
        out = []
        for i, item in enumerate(raw):
            p = f"{path}[{i}]"
            if not isinstance(item, Mapping):
                self.error(p, "must be a mapping")
                continue
            parsed = item_fn(item, p)
            if parsed is not None:
                out.append(parsed)
        return out

    def _unique(self, items, path):
        seen = set()
        for i, item in enumerate(items):
            if item.id in seen:
                self.error(f"{path}[{i}].id", f"duplicate id {item.id!r}")
            seen.add(item.id)

    def _ident(self, item, path, key="id"):
        value = item.get(key)
        if not isinstance(value, str) or not value:
            self.error(f"{path}.{key}", "required identifier missing")
            return None
        return value

    def _number(self, item, key, path):
        value = item.get(key)
        if value is None:
            return None
        if not _is_number(value):
            self.error(f"{path}.{key}", "must be a number")
            return None
        return value

    def _states(self, raw, path):
        if raw is None:
            return {}
        if not isinstance(raw, Mapping):
            self.error(path, "states must be a mapping of label to number")
            return {}
        out = {}
        for label, value in raw.items():
            if not _is_number(value):
                self.error(f"{path}.{label}", "state value must be a number")
                continue
            out[str(label)] = value
        return out

    def _preset(self, item, path):
        pid = self._ident(item, path)
        lo = self._number(item, "min_value", path)
        hi = self._number(item, "max_value", path)
        states = self._states(item.get("states"), f"{path}.states")
        if lo is not None and hi is not None and lo > hi:
            self.error(path, f"min_value {lo} exceeds max_value {hi}")
        for label, value in states.items():
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                self.error(f"{path}.states.{label}", f"state value {value} outside [{lo}, {hi}]")
        if pid is None:
            return None
        return Preset(pid, lo, hi, states)

    def _station(self, item, path):
        sid = self._ident(item, path)
        source = item.get("source")
        if not isinstance(source, str) or not source:
            self.error(f"{path}.source", "station requires exactly one source id")
            source = ""
        sensors = self._list(item, "sensors", self._sensor, f"{path}.sensors")
        self._unique(sensors, f"{path}.sensors")
        if sid is None:
            return None
        return Station(sid, str(item.get("name", sid)), source, tuple(sensors))

    def _sensor(self, item, path):
        sid = self._ident(item, path)
        kind = item.get("type", "int")
        if kind not in SENSOR_KINDS:
            self.error(f"{path}.type", f"sensor type must be one of {', '.join(SENSOR_KINDS)}")
        preset = item.get("preset")
        if preset is not None and not isinstance(preset, str):
            self.error(f"{path}.preset", "preset must be an identifier")
            preset = None
        disc = None
        if "discretization" in item:
            disc = self._discretization(item["discretization"], f"{path}.discretization")
        lo = self._number(item, "min_value", path)
        hi = self._number(item, "max_value", path)
        if lo is not None and hi is not None and lo > hi:
            self.error(path, f"min_value {lo} exceeds max_value {hi}")
        states = self._states(item.get("states"), f"{path}.states")
        if sid is None:
            return None
        return SensorDecl(sid, kind, preset, states, disc, lo, hi)

    def _discretization(self, raw, path):
        if not isinstance(raw, Mapping):
            self.error(path, "must be a mapping with lower, intermediate, upper")
            return None
        lower = self._bound(raw.get("lower"), f"{path}.lower")
        upper = self._bound(raw.get("upper"), f"{path}.upper")
        inter_raw = raw.get("intermediate", [])
        if inter_raw and not isinstance(inter_raw[0], list):
            inter_raw = [inter_raw]
        bands = []
        for i, band in enumerate(inter_raw):
            p = f"{path}.intermediate[{i}]" if len(inter_raw) > 1 else f"{path}.intermediate"
            if (not isinstance(band, list) or len(band) != 3 or not _is_number(band[0])
                    or not _is_number(band[1]) or not isinstance(band[2], str)):
                self.error(p, "expected [lo, hi, label]")
                return None
            bands.append((band[0], band[1], band[2]))
        if lower is None or upper is None:
            return None

        edges = [lower[0]]
        for lo, hi, _ in bands:
            if lo != edges[-1]:
                self.error(path, f"discretization not contiguous: band starts at {lo}, expected {edges[-1]}")
                return None
            edges.append(hi)
        if upper[0] != edges[-1]:
            self.error(path, f"discretization not contiguous: upper threshold {upper[0]}, expected {edges[-1]}")
            return None
        if bands and any(a >= b for a, b in zip(edges, edges[1:])):
            self.error(path, "discretization thresholds must be strictly increasing")
            return None
        labels = [lower[1], *(b[2] for b in bands), upper[1]]
        if len(set(labels)) != len(labels):
            self.error(path, "discretization labels must be unique")
            return None
        return Discretization(lower, tuple(bands), upper)

    def _bound(self, raw, path):
        if not isinstance(raw, list) or len(raw) != 2 or not _is_number(raw[0]) or not isinstance(raw[1], str):
            self.error(path, "expected [threshold, label]")
            return None
        return (raw[0], raw[1])

    def _expand(self, value, path):
        if value is None:
            return None
        try:
            return substitute_env(str(value), self.env)
        except KeyError as exc:
            msg = f"unresolved environment variable {exc.args[0]}"
            if self.strict_env:
                self.error(path, msg)
            else:
                self.warnings.append(f"{path}: {msg}")
            return None

    def _source(self, item, path):
        sid = self._ident(item, path)
        stype = item.get("type")
        if stype not in SOURCE_TYPES:
            self.error(f"{path}.type", f"source type must be one of {', '.join(SOURCE_TYPES)}")
        schema_raw = item.get("schema")
        schema: dict[str, str] = {}
        if not isinstance(schema_raw, Mapping):
            self.error(f"{path}.schema", "schema mapping required")
        else:
            for name, ftype in schema_raw.items():
                if ftype not in FIELD_TYPES:
                    self.error(f"{path}.schema.{name}", f"field type must be one of {', '.join(FIELD_TYPES)}")
                schema[str(name)] = ftype
            if schema.get("ts") != "string":
                self.error(f"{path}.schema", "schema must declare field 'ts' of type string")
        url_template = item.get("url")
        url = self._expand(url_template, f"{path}.url")
        file_path = self._expand(item.get("path"), f"{path}.path")
        topic = item.get("topic")
        if stype == "mqtt":
            if not url_template:
                self.error(f"{path}.url", "mqtt source requires url")
            if not topic:
                self.error(f"{path}.topic", "mqtt source requires topic")
        elif stype == "file" and not item.get("path"):
            self.error(f"{path}.path", "file source requires path")
        if sid is None:
            return None
        return SourceDecl(
            id=sid,
            type=stype,
            schema=schema,
            url=url,
            url_template=None if url_template is None else str(url_template),
            client_id=item.get("client_id"),
            topic=topic,
            content_type=item.get("content_type", "json"),
            path=file_path,
        )

    def _sink(self, item, path):
        sid = self._ident(item, path)
        stype = item.get("type")
        if stype not in SINK_TYPES:
            self.error(f"{path}.type", f"sink type must be one of {', '.join(SINK_TYPES)}")
        fmt = item.get("format", "jsonl")
        if fmt not in ("jsonl", "xes"):
            self.error(f"{path}.format", "sink format must be jsonl or xes")
        if stype == "file" and not item.get("path"):
            self.error(f"{path}.path", "file sink requires path")
        if stype == "mqtt" and not (item.get("url") and item.get("topic")):
            self.error(path, "mqtt sink requires url and topic")
        if sid is None:
            return None
        return SinkDecl(
            id=sid,
            type=stype,
            path=self._expand(item.get("path"), f"{path}.path"),
            format=fmt,
            url=self._expand(item.get("url"), f"{path}.url"),
            topic=item.get("topic"),
        )

    def _check_resolved(self, system: IoTSystem) -> None:
        for i, st in enumerate(system.stations):
            for j, sensor in enumerate(st.sensors):
                p = f"stations[{i}].sensors[{j}]"
                lo, hi = sensor.min_value, sensor.max_value
                for label, value in sensor.states.items():
                    if (lo is not None and value < lo) or (hi is not None and value > hi):
                        self.error(f"{p}.states.{label}", f"state value {value} outside [{lo}, {hi}]")
                if sensor.discretization is not None:
                    for label in sensor.discretization.labels:
                        if label in sensor.states:
                            self.warnings.append(
                                f"{p}: label {label!r} is both a state and a discretization band; the state wins"
                            )
