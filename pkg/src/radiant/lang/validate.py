from __future__ import annotations

import math

from radiant.iot_config import Band, Exact, IoTSystem, LabelError, resolve_label
from radiant.lang.ast import (
    CHANGE_FAMILY,
    TIME_UNITS,
    Condition,
    ConditionType,
    Diagnostic,
    Label,
    NumberLiteral,
    ProcessDecl,
    Span,
)

_NOWHERE = Span(1, 1, 1)


def range_bounds(lo_spec, hi_spec) -> tuple[float, float]:
    """Lower and upper edges of an ``in_range A to B`` span.

    A band operand contributes its lower edge on the left and its upper edge
    on the right, so ``in_range low to mid`` covers both bands.
    """
    lo = lo_spec.value if isinstance(lo_spec, Exact) else lo_spec.lo
    hi = hi_spec.value if isinstance(hi_spec, Exact) else hi_spec.hi
    return lo, hi


def validate(proc: ProcessDecl, system: IoTSystem) -> list[Diagnostic]:
    """Check a parsed process against the IoT configuration.

    Returns diagnostics; the program is executable iff none is an error.
    """
    diags: list[Diagnostic] = []

    def err(msg, span):
        diags.append(Diagnostic("error", msg, span or _NOWHERE))

    def warn(msg, span):
        diags.append(Diagnostic("warning", msg, span or _NOWHERE))

    if not proc.activities:
        err("process requires at least one activity", proc.span)
    seen = set()
    for activity in proc.activities:
        if activity.name in seen:
            err(f"duplicate activity name {activity.name!r}", activity.span)
        seen.add(activity.name)
        for pattern in activity.patterns:
            if not pattern.cases:
                err(f"{pattern.kind.value} pattern of {activity.name!r} has no conditions", pattern.span)
            for case in pattern.cases:
                if not case.conditions:
                    err(f"empty case in {pattern.kind.value} pattern of {activity.name!r}", pattern.span)
                for cond in case.conditions:
                    _check_condition(cond, system, err, warn)
    return diags


def _check_condition(cond: Condition, system: IoTSystem, err, warn) -> None:
    span = cond.span
    ctype = cond.ctype
    if len(cond.operands) != ctype.arity:
        err(f"'{ctype.value}' takes {ctype.arity} operand(s), got {len(cond.operands)}", span)
        return
    if cond.time_constraint is not None:
        tc = cond.time_constraint
        if ctype not in CHANGE_FAMILY:
            err(f"time constraint not allowed on '{ctype.value}'", span)
        if not isinstance(tc.amount, int) or tc.amount <= 0:
            err("time constraint amount must be a positive integer", span)
        if tc.unit not in TIME_UNITS:
            err(f"unknown time unit {tc.unit!r}", span)

    station = system.station(cond.station)
    if station is None:
        known = ", ".join(s.id for s in system.stations)
        err(f"unknown station {cond.station!r} (known: {known})", span)
        return
    sensor = station.sensor(cond.sensor)
    if sensor is None:
        known = ", ".join(s.id for s in station.sensors)
        err(f"unknown sensor {cond.sensor!r} in station {cond.station!r} (known: {known})", span)
        return
    source = system.source(station.source)
    if source is not None and cond.sensor not in source.schema:
        warn(f"sensor {cond.sensor!r} is not a field of source {source.id!r}; it will never have a reading", span)

    specs = []
    for op in cond.operands:
        if isinstance(op, Label):
            try:
                specs.append(resolve_label(sensor, op.name))
            except LabelError as exc:
                err(str(exc), span)
                specs.append(None)
        elif isinstance(op, NumberLiteral):
            value = op.value
            if isinstance(value, float) and not math.isfinite(value):
                err("numeric operand must be finite", span)
            lo, hi = sensor.min_value, sensor.max_value
            if (lo is not None and value < lo) or (hi is not None and value > hi):
                err(f"value {value} out of range [{lo}, {hi}] for sensor {cond.station}.{cond.sensor}", span)
            specs.append(Exact(value))
        else:
            err(f"invalid operand {op!r}", span)
            specs.append(None)

    if None in specs:
        return
    if ctype is ConditionType.IN_RANGE:
        lo, hi = range_bounds(*specs)
        if not lo < hi:
            err(f"in_range requires lower bound < upper bound, got {lo} and {hi}", span)
    elif ctype is ConditionType.CHANGES_FROM and specs[0] == specs[1]:
        warn("changes_from with identical from and to values never fires", span)
    elif ctype in (ConditionType.IS_LOWER, ConditionType.IS_HIGHER) and isinstance(specs[0], Band):
        band = specs[0]
        if (ctype is ConditionType.IS_LOWER and band.lo == -math.inf) or (
            ctype is ConditionType.IS_HIGHER and band.hi == math.inf
        ):
            warn(f"'{ctype.value}' against an open-ended band never fires", span)
