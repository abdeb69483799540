"""Runtime detector for one activity: pattern evaluation plus sequencing.

Each detector owns its state; nothing is shared between detectors, so
adding one never changes another's output.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from radiant.compiler import CompiledPattern, DetectorSpec
from radiant.engine.conditions import SensorHistory, eval_condition, eval_instant
from radiant.engine.events import ActivityDetection, PatternEvent, SensorEvent
from radiant.lang.ast import PatternKind

START = "StartPattern"
INTERMEDIATE = "IntermediatePattern"
END = "EndPattern"


class Phase(str, Enum):
    IDLE = "idle"
    AWAIT_INTERMEDIATE = "await_intermediate"
    AWAIT_END = "await_end"


@dataclass
class DetectorState:
    n_intermediates: int = 0
    histories: dict[tuple[str, str], SensorHistory] = field(default_factory=dict)
    phase: Phase = Phase.IDLE
    next_intermediate: int = 0
    pending_start: int | None = None

    @classmethod
    def for_spec(cls, spec: DetectorSpec) -> "DetectorState":
        horizons: dict[tuple[str, str], int] = {}
        for station, sensors in spec.sensors.items():
            for sensor in sensors:
                horizons[(station, sensor)] = 0
        for pattern in spec.pattern_chain:
            for c in pattern.conditions:
                key = (c.station, c.sensor)
                horizons[key] = max(horizons.get(key, 0), c.window_ms or 0)
        return cls(
            n_intermediates=spec.n_intermediates,
            histories={k: SensorHistory(h) for k, h in horizons.items()},
        )


def _kind_name(pattern: CompiledPattern) -> str:
    return {PatternKind.START: START, PatternKind.INTERMEDIATE: INTERMEDIATE, PatternKind.END: END}[pattern.kind]


def _condition_holds(cond, state: DetectorState, event: SensorEvent) -> bool:
    hist = state.histories[(cond.station, cond.sensor)]
    reading = cond.station == event.station and cond.sensor in event.values
    if cond.predicate.is_change:
        # Change conditions only fire on a fresh reading of their own sensor.
        if not reading:
            return False
        return eval_condition(cond, hist.last, event.values[cond.sensor], event.ts, hist)
    cur = event.values[cond.sensor] if reading else hist.last
    if cur is None:
        return False
    return eval_instant(cond, cur)


def step(spec: DetectorSpec, state: DetectorState, event: SensorEvent) -> list[PatternEvent]:
    """Evaluate every pattern of ``spec`` at ``event``; update ``state`` in place.

    Returns the pattern events fired at this event, in chain order.
    """
    fired = []
    if event.station in spec.stations:
        for pattern in spec.pattern_chain:
            if any(all(_condition_holds(c, state, event) for c in case) for case in pattern.cases):
                fired.append(PatternEvent(_kind_name(pattern), spec.process, spec.activity, event.ts, pattern.index))
        for sensor in spec.sensors.get(event.station, ()):
            if sensor in event.values:
                state.histories[(event.station, sensor)].add(event.ts, event.values[sensor])
    return fired


def advance_activity(state: DetectorState, pe: PatternEvent) -> ActivityDetection | None:
    """Feed one pattern event to the sequencing state machine.

    A start always (re)opens a match; intermediates must arrive in order;
    an end closes the match only once all intermediates were seen.  Any
    other event is ignored.
    """
    if pe.kind == START:
        state.pending_start = pe.ts
        state.next_intermediate = 0
        state.phase = Phase.AWAIT_INTERMEDIATE if state.n_intermediates else Phase.AWAIT_END
    elif pe.kind == INTERMEDIATE:
        if state.phase is Phase.AWAIT_INTERMEDIATE and pe.index == state.next_intermediate:
            state.next_intermediate += 1
            if state.next_intermediate == state.n_intermediates:
                state.phase = Phase.AWAIT_END
    elif pe.kind == END and state.phase is Phase.AWAIT_END:
        detection = ActivityDetection(pe.process, pe.activity, state.pending_start, pe.ts)
        state.phase = Phase.IDLE
        state.pending_start = None
        state.next_intermediate = 0
        return detection
    return None


class Detector:
    """A compiled activity detector bundled with its private state."""

    def __init__(self, spec: DetectorSpec):
        self.spec = spec
        self.state = DetectorState.for_spec(spec)

    def __repr__(self) -> str:
        return f"Detector({self.spec.process}.{self.spec.activity}, phase={self.state.phase.value})"

    def accepts(self, event: SensorEvent) -> bool:
        return event.station in self.spec.stations

    def feed(self, event: SensorEvent) -> tuple[list[PatternEvent], list[ActivityDetection]]:
        patterns = step(self.spec, self.state, event)
        detections = []
        for pe in patterns:
            det = advance_activity(self.state, pe)
            if det is not None:
                detections.append(det)
        return patterns, detections
