"""Per-sensor reading history and condition predicates."""

from __future__ import annotations

from collections import deque

from radiant.compiler import CompiledCondition
from radiant.lang.ast import ConditionType
from radiant.lang.validate import range_bounds
from radiant.iot_config import Exact


class SensorHistory:
    """Readings of one sensor, newest last.

    Keeps every reading younger than ``horizon_ms`` relative to the newest
    one, plus the single reading just before that, which windowed
    ``is_changing`` needs to see a change at the window's first reading.
    """

    __slots__ = ("horizon_ms", "readings")

    def __init__(self, horizon_ms: int = 0):
        self.horizon_ms = horizon_ms
        self.readings: deque[tuple[int, float]] = deque()

    @property
    def last(self) -> float | None:
        return self.readings[-1][1] if self.readings else None

    def add(self, ts: int, value: float) -> None:
        self.readings.append((ts, value))
        cutoff = ts - self.horizon_ms
        while len(self.readings) > 2 and self.readings[1][0] < cutoff:
            self.readings.popleft()


def holds(spec, value: float) -> bool:
    return spec.contains(value)


def eval_instant(cond: CompiledCondition, cur: float) -> bool:
    p = cond.predicate
    ops = cond.operands
    if p is ConditionType.IS_EQUAL:
        return ops[0].contains(cur)
    if p is ConditionType.IN_RANGE:
        lo, hi = range_bounds(*ops)
        return lo <= cur and (cur <= hi if isinstance(ops[1], Exact) else cur < hi)
    spec = ops[0]
    if isinstance(spec, Exact):
        v = spec.value
        if p is ConditionType.IS_LOWER:
            return cur < v
        if p is ConditionType.IS_LOWER_OR_EQUAL:
            return cur <= v
        if p is ConditionType.IS_HIGHER:
            return cur > v
        if p is ConditionType.IS_HIGHER_OR_EQUAL:
            return cur >= v
    else:
        # A band compares as the whole band: below it, at or below it, etc.
        if p is ConditionType.IS_LOWER:
            return cur < spec.lo
        if p is ConditionType.IS_LOWER_OR_EQUAL:
            return cur < spec.hi
        if p is ConditionType.IS_HIGHER:
            return cur >= spec.hi
        if p is ConditionType.IS_HIGHER_OR_EQUAL:
            return cur >= spec.lo
    raise ValueError(f"{p.value} is not an instantaneous condition")


def eval_condition(
    cond: CompiledCondition,
    prev: float | None,
    cur: float,
    now_ts: int,
    history: SensorHistory | None = None,
) -> bool:
    """Evaluate ``cond`` at a reading ``cur`` taken at ``now_ts``.

    ``prev`` is the sensor's previous reading (``None`` on the first one)
    and ``history`` its earlier readings, needed only for windowed change
    conditions.
    """
    p = cond.predicate
    if not p.is_change:
        return eval_instant(cond, cur)
    if prev is None:
        return False
    w = cond.window_ms
    if w is None:
        if p is ConditionType.CHANGES_FROM:
            return cond.operands[0].contains(prev) and cond.operands[1].contains(cur)
        if p is ConditionType.IS_CHANGING:
            return cur != prev
        if p is ConditionType.IS_INCREASING:
            return cur > prev
        return cur < prev

    readings = history.readings if history is not None else ()
    start = now_ts - w
    if p is ConditionType.CHANGES_FROM:
        if not cond.operands[1].contains(cur):
            return False
        a = cond.operands[0]
        return any(start <= t < now_ts and a.contains(v) for t, v in readings)
    if p is ConditionType.IS_CHANGING:
        if cur != prev:
            return True
        seq = list(readings)
        return any(seq[j][0] >= start and seq[j][1] != seq[j - 1][1] for j in range(1, len(seq)))
    earliest = next((v for t, v in readings if t >= start), None)
    if earliest is None:
        return False
    return cur > earliest if p is ConditionType.IS_INCREASING else cur < earliest
