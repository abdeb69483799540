"""Render detector specs as StreamingSQL (Siddhi) app text.

The output is reference text for inspection or deployment elsewhere; the
native engine in :mod:`radiant.engine` is what executes detectors.

Dialect choices made here:

* one query per pattern comparing two consecutive events ``e1`` and ``e2``
  of the station stream, inserting into ``DetectedPatterns``;
* a pattern containing a windowed change condition becomes a followed-by
  query ``e1 = S -> e2 = S[...] within <w>`` using the largest window;
* a pattern reading sensors from several stations reads a joined stream
  whose attributes are named ``<station>_<sensor>``;
* the end-pattern query selects ``e1.ts``, as the generated apps do.
"""

from __future__ import annotations

import math

from radiant.compiler import CompiledCondition, CompiledPattern, DetectorSpec, display_name
from radiant.iot_config import Exact, IoTSystem
from radiant.lang.ast import ConditionType, PatternKind
from radiant.lang.validate import range_bounds

_UNITS = (("hour", 3_600_000), ("min", 60_000), ("sec", 1_000), ("millisec", 1))


def quote(text: str) -> str:
    return "'" + text.replace("\\", "\\\\").replace("'", "\\'") + "'"


def literal(x: float) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return repr(x)


def window_clause(ms: int) -> str:
    for unit, size in _UNITS:
        if ms % size == 0:
            return f"within {ms // size} {unit}"
    raise AssertionError("unreachable")


def event_name(pattern: CompiledPattern, n_intermediates: int) -> str:
    if pattern.kind is PatternKind.INTERMEDIATE:
        return "IntermediatePattern" if n_intermediates == 1 else f"IntermediatePattern{pattern.index + 1}"
    return f"{pattern.kind.value}Pattern"


def _member(ref: str, spec) -> str:
    if isinstance(spec, Exact):
        return f"{ref}=={literal(spec.value)}"
    parts = []
    if not math.isinf(spec.lo):
        parts.append(f"{ref}>={literal(spec.lo)}")
    if not math.isinf(spec.hi):
        parts.append(f"{ref}<{literal(spec.hi)}")
    return " and ".join(parts)


def condition_expr(cond: CompiledCondition, attr: str) -> str:
    prev, cur = f"e1.{attr}", f"e2.{attr}"
    p = cond.predicate
    ops = cond.operands
    if p is ConditionType.CHANGES_FROM:
        return f"{_member(prev, ops[0])} and {_member(cur, ops[1])}"
    if p is ConditionType.IS_CHANGING:
        return f"{prev}!={cur}"
    if p is ConditionType.IS_INCREASING:
        return f"{cur}>{prev}"
    if p is ConditionType.IS_DECREASING:
        return f"{cur}<{prev}"
    if p is ConditionType.IS_EQUAL:
        return _member(cur, ops[0])
    if p is ConditionType.IN_RANGE:
        lo, hi = range_bounds(*ops)
        upper = "<=" if isinstance(ops[1], Exact) else "<"
        return f"{cur}>={literal(lo)} and {cur}{upper}{literal(hi)}"
    spec = ops[0]
    if isinstance(spec, Exact):
        op = {
            ConditionType.IS_LOWER: "<",
            ConditionType.IS_LOWER_OR_EQUAL: "<=",
            ConditionType.IS_HIGHER: ">",
            ConditionType.IS_HIGHER_OR_EQUAL: ">=",
        }[p]
        return f"{cur}{op}{literal(spec.value)}"
    op, edge = {
        ConditionType.IS_LOWER: ("<", spec.lo),
        ConditionType.IS_LOWER_OR_EQUAL: ("<", spec.hi),
        ConditionType.IS_HIGHER: (">=", spec.hi),
        ConditionType.IS_HIGHER_OR_EQUAL: (">=", spec.lo),
    }[p]
    return f"{cur}{op}{literal(edge)}"


def pattern_filter(pattern: CompiledPattern, attr_of) -> str:
    cases = [" and ".join(f"({condition_expr(c, attr_of(c))})" for c in case) for case in pattern.cases]
    if len(cases) == 1:
        return cases[0]
    return " or ".join(f"({c})" for c in cases)


def _stream_definition(source, stream: str) -> list[str]:
    if source.type == "mqtt":
        opts = [f"type = 'mqtt'", f"url = {quote(source.url_template or '')}", f"topic = {quote(source.topic or '')}"]
    else:
        opts = [f"type = 'file'", f"file.uri = {quote(source.path or '')}"]
    opts.append(f"@map(type = {quote(source.content_type or 'json')})")
    columns = ", ".join(f"{name} {ftype}" for name, ftype in source.schema.items())
    return [f"@source({', '.join(opts)})", f"define stream {stream}({columns});"]


def _join_queries(spec: DetectorSpec, system: IoTSystem, joined: str) -> list[str]:
    """Chain pairwise length-1 window joins into one stream of all sensors."""
    lines = []
    stations = list(spec.stations)
    left_stream = spec.stations[stations[0]]
    left_cols = [("ts", f"{stations[0]}_ts")] + [(s, f"{stations[0]}_{s}") for s in spec.sensors[stations[0]]]
    for i, station in enumerate(stations[1:], start=1):
        right_stream = spec.stations[station]
        target = joined if i == len(stations) - 1 else f"{joined}{i}"
        right_cols = [("ts", f"{station}_ts")] + [(s, f"{station}_{s}") for s in spec.sensors[station]]
        select = [f"a.{src} as {dst}" for src, dst in left_cols] + [f"b.{src} as {dst}" for src, dst in right_cols]
        if i == len(stations) - 1:
            select.insert(0, f"a.{left_cols[0][0]} as ts")
        lines += [
            f"@info(name='Join-{i}')",
            f"from {left_stream}#window.length(1) as a join {right_stream}#window.length(1) as b",
            f"select {', '.join(select)}",
            f"insert into {target};",
            "",
        ]
        left_stream = target
        left_cols = [(dst, dst) for _, dst in left_cols + right_cols]
    return lines


def emit_query_text(spec: DetectorSpec, system: IoTSystem) -> str:
    """Render one detector as a Siddhi app named ``<Process>-<Activity>``."""
    activity = display_name(spec.activity)
    lines = [f"@App:name({quote(f'{spec.process}-{activity}')})", ""]

    defined = set()
    for station, source_id in spec.stations.items():
        if source_id in defined:
            continue
        defined.add(source_id)
        lines += _stream_definition(system.source(source_id), source_id)
        lines.append("")

    lines += [
        "define stream DetectedPatterns(event string, activity string, ts string);",
        "",
        "@sink(type = 'log')",
        "define stream DetectedActivities(event string, activity string, ts_start string, ts_end string);",
        "",
    ]

    joined = f"{spec.activity}JoinedStream"
    if len(spec.stations) > 1 and any(len({c.station for c in p.conditions}) > 1 for p in spec.pattern_chain):
        lines += _join_queries(spec, system, joined)

    for pattern in spec.pattern_chain:
        stations = sorted({c.station for c in pattern.conditions})
        if len(stations) == 1:
            stream = spec.stations[stations[0]]
            attr_of = lambda c: c.sensor
        else:
            stream = joined
            attr_of = lambda c: f"{c.station}_{c.sensor}"
        windows = [c.window_ms for c in pattern.conditions if c.window_ms is not None]
        filt = pattern_filter(pattern, attr_of)
        if windows:
            head = f"from every e1 = {stream} -> e2 = {stream}[{filt}] {window_clause(max(windows))}"
        else:
            head = f"from every e1 = {stream}, e2 = {stream}[{filt}]"
        name = event_name(pattern, spec.n_intermediates)
        ts_ref = "e1.ts" if pattern.kind is PatternKind.END else "e2.ts"
        lines += [
            f"@info(name={quote(name)})",
            head,
            f"select {quote(name)} as event, {quote(activity)} as activity, {ts_ref} as ts",
            "insert into DetectedPatterns;",
            "",
        ]

    refs = [f"e1 = DetectedPatterns[event == 'StartPattern']"]
    for k, pattern in enumerate(spec.pattern_chain[1:], start=2):
        name = event_name(pattern, spec.n_intermediates)
        refs.append(f"not DetectedPatterns[event == 'StartPattern'] and e{k} = DetectedPatterns[event == {quote(name)}]")
    last = len(spec.pattern_chain)
    lines += [
        "@info(name='Detect-Activity')",
        "from every " + " -> ".join(refs),
        f"select 'Activity' as event, {quote(activity)} as activity, e1.ts as ts_start, e{last}.ts as ts_end",
        "insert into DetectedActivities;",
    ]
    return "\n".join(lines) + "\n"
