from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radiant.compiler import compile_process
from radiant.engine import Detector, DetectorState, PatternEvent, SensorEvent, advance_activity, step
from radiant.engine.detector import END, INTERMEDIATE, START
from radiant.lang import parse_radiant

from conftest import DATA
from oracles import sequence_oracle
from programs import random_program

ALPHABET = ("S", "I0", "I1", "E")


def pattern_event(symbol, ts):
    if symbol == "S":
        return PatternEvent(START, "P", "A", ts)
    if symbol == "E":
        return PatternEvent(END, "P", "A", ts)
    return PatternEvent(INTERMEDIATE, "P", "A", ts, int(symbol[1:]))


def machine_matches(word, n_intermediates):
    state = DetectorState(n_intermediates=n_intermediates)
    out = []
    for i, symbol in enumerate(word):
        det = advance_activity(state, pattern_event(symbol, i))
        if det is not None:
            out.append((det.ts_start, det.ts_end))
    return out


def all_words(max_len):
    for n in range(max_len + 1):
        yield from itertools.product(ALPHABET, repeat=n)


class TestSequencing:
    def test_exhaustive_two_intermediates(self):
        count = 0
        for word in all_words(8):
            assert machine_matches(word, 2) == sequence_oracle(list(word), 2), word
            count += 1
        assert count == sum(4**n for n in range(9))

    @pytest.mark.parametrize("n_intermediates", [0, 1])
    def test_exhaustive_fewer_intermediates(self, n_intermediates):
        for word in all_words(6):
            assert machine_matches(word, n_intermediates) == sequence_oracle(list(word), n_intermediates), word

    def test_examples(self):
        assert machine_matches(["S", "I0", "E"], 1) == [(0, 2)]
        assert machine_matches(["S", "S", "E"], 0) == [(1, 2)]
        assert machine_matches(["I0", "E"], 1) == []

    def test_idle_has_no_pending_start(self):
        for word in all_words(5):
            state = DetectorState(n_intermediates=1)
            for i, symbol in enumerate(word):
                advance_activity(state, pattern_event(symbol, i))
                if state.phase.value == "idle":
                    assert state.pending_start is None


def sm1(ts, **values):
    base = {"i1_light_barrier": 0, "i2_color_sensor": 1800, "m1_speed": 0, "o5_valve": 0, "o6_valve": 0}
    base.update(values)
    return SensorEvent(f"SM_1@{ts}", "SM_1", ts, base)


@pytest.fixture(scope="module")
def sort_spec(production):
    proc, _ = parse_radiant((DATA / "listing10.rad").read_text())
    return compile_process(proc, production)[1]


def kinds(spec, events):
    state = DetectorState.for_spec(spec)
    return [[pe.kind for pe in step(spec, state, ev)] for ev in events]


class TestStep:
    def test_start_fires_on_pair(self, sort_spec):
        got = kinds(sort_spec, [sm1(0), sm1(100, m1_speed=-512, i1_light_barrier=1)])
        assert got == [[], [START]]

    def test_conjunct_fails(self, sort_spec):
        got = kinds(sort_spec, [sm1(0), sm1(100, m1_speed=-512)])
        assert got == [[], []]

    def test_second_end_case(self, sort_spec):
        got = kinds(sort_spec, [sm1(0, o6_valve=75), sm1(100, o6_valve=0)])
        assert got == [[], [END]]

    def test_pattern_event_stamped_with_completing_event(self, sort_spec):
        state = DetectorState.for_spec(sort_spec)
        step(sort_spec, state, sm1(0, o5_valve=75))
        (pe,) = step(sort_spec, state, sm1(250, o5_valve=0))
        assert pe.ts == 250

    def test_other_station_ignored(self, sort_spec):
        state = DetectorState.for_spec(sort_spec)
        assert step(sort_spec, state, SensorEvent("x", "MM_1", 0, {"m1_speed": 0})) == []
        assert all(h.last is None for h in state.histories.values())

    def test_full_activity(self, sort_spec):
        det = Detector(sort_spec)
        trace = [
            sm1(0),
            sm1(100, m1_speed=-512, i1_light_barrier=1),
            sm1(600, m1_speed=-512, i2_color_sensor=1750),
            sm1(1100, m1_speed=-512, i2_color_sensor=1750, o5_valve=75),
            sm1(1600, m1_speed=0, i2_color_sensor=1750, o5_valve=0),
        ]
        detections = [d for ev in trace for d in det.feed(ev)[1]]
        assert [(d.ts_start, d.ts_end) for d in detections] == [(100, 1600)]


@pytest.fixture(scope="module")
def join_spec(healthcare):
    proc, diags = parse_radiant(
        "Process P: Activity Donate:"
        " Start: In CHS sensor load_cell changes_from low to high; In LDS sensor SjH_motion_status is_equal on;"
        " End: In LDS sensor SjH_motion_status changes_from on to off;"
    )
    assert not diags
    return compile_process(proc, healthcare)[0]


class TestSnapshotJoin:
    def test_instant_condition_reads_last_known_value(self, join_spec):
        events = [
            SensorEvent("a", "LDS", 0, {"SjH_motion_status": 1}),
            SensorEvent("b", "CHS", 10, {"load_cell": 200}),
            SensorEvent("c", "CHS", 20, {"load_cell": 1500}),
        ]
        assert kinds(join_spec, events) == [[], [], [START]]

    def test_change_condition_needs_its_own_station(self, join_spec):
        # The LDS reading does not re-fire the CHS change.
        events = [
            SensorEvent("a", "LDS", 0, {"SjH_motion_status": 0}),
            SensorEvent("b", "CHS", 10, {"load_cell": 200}),
            SensorEvent("c", "CHS", 20, {"load_cell": 1500}),
            SensorEvent("d", "LDS", 30, {"SjH_motion_status": 1}),
        ]
        assert kinds(join_spec, events) == [[], [], [], []]

    def test_unknown_value_is_false(self, join_spec):
        events = [SensorEvent("b", "CHS", 10, {"load_cell": 200}), SensorEvent("c", "CHS", 20, {"load_cell": 1500})]
        assert kinds(join_spec, events) == [[], []]


def random_timeline(rng, system, n):
    events = []
    ts = 0
    for i in range(n):
        station = rng.choice(system.stations)
        values = {}
        for sensor in station.sensors:
            if rng.random() < 0.9:
                candidates = list(sensor.states.values()) or [sensor.min_value or 0, sensor.max_value or 1]
                values[sensor.id] = rng.choice(candidates + [rng.randint(-600, 2000)])
        events.append(SensorEvent(str(i), station.id, ts, values))
        ts += rng.choice((0, 50, 200, 1000))
    return events


def detections_of(specs, events):
    detectors = [Detector(s) for s in specs]
    out = {s.activity: [] for s in specs}
    for ev in events:
        for d in detectors:
            if d.accepts(ev):
                out[d.spec.activity] += d.feed(ev)[1]
    return out


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_isolation_and_ordering(seed, production):
    rng = random.Random(seed)
    specs = compile_process(random_program(rng, production), production)
    events = random_timeline(rng, production, 150)
    together = detections_of(specs, events)
    for spec in specs:
        alone = detections_of([spec], events)[spec.activity]
        assert alone == together[spec.activity]
        assert all(d.ts_start <= d.ts_end for d in alone)
