"""Generate the synthetic smart-factory replay fixture.

Three stations run concurrently: a sorting line (SM_1), a milling machine
(MM_1) and an oven (OV_1).  Each activity instance is scripted as a list of
actuator and sensor changes; stations publish full snapshots at a fixed
period.  Some instances carry anomalies:

* Sort_product false start: the belt is test-run with a workpiece in the
  light barrier, so the real start goes unnoticed and the detection
  begins early (overfill).
* Sort_product merged execution: two workpieces pass back to back with the
  belt running and the valve open, so one detection spans both.
* Sort_product deletion: the workpiece colour matches the idle reading, so
  the colour sensor never changes and the instance is missed.
* Mill_workpiece aborted run: a job is started and aborted; the pattern
  chain completes although nothing was milled (insertion).
* Bake_workpiece heater glitch: a start without follow-up, absorbed when
  the next start restarts the match.

Expected detections follow from the script: the tick at which each pattern
condition first becomes observable.  The oracle report is computed from
them with the brute-force metric oracles in ``tests/oracles.py``.

Usage: python scripts/make_factory_fixture.py [OUT_DIR]
"""

from __future__ import annotations

import json
import random
import sys
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT / "tests"))

from oracles import report_oracle  # noqa: E402

from radiant.engine.events import format_ts  # noqa: E402
from radiant.evalkit import intervals_from_records  # noqa: E402

SEED = 20230130
T0 = int(datetime(2023, 1, 30, 13, 0, tzinfo=timezone.utc).timestamp() * 1000)
S = 1000

CONFIG = """\
# Synthetic smart factory: sorting line, milling machine and oven.
presets:
  - id: motor_preset
    min_value: -512
    max_value: 512
    states:
      low: -512
      off: 0
      high: 512

stations:
  - id: SM_1
    name: Sorting Machine
    source: SM_1Stream
    sensors:
      - id: i1_light_barrier
        type: switch
      - id: i2_color_sensor
        discretization:
          lower: [1725, "red"]
          intermediate: [1725, 1790, "blue"]
          upper: [1790, "white"]
      - id: m1_speed
        type: int
        preset: motor_preset
      - id: o5_valve
        type: int
        states:
          open: 75
          closed: 0
      - id: o6_valve
        type: int
        states:
          open: 75
          closed: 0
  - id: MM_1
    name: Milling Machine
    source: MM_1Stream
    sensors:
      - id: i1_pos_switch
        type: switch
      - id: o8_compressor
        type: int
        min_value: 0
        max_value: 512
        states:
          off: 0
          on: 512
      - id: m1_speed
        type: int
        preset: motor_preset
  - id: OV_1
    name: Oven
    source: OV_1Stream
    sensors:
      - id: i5_door
        type: int
        states:
          closed: 0
          open: 1
      - id: o7_heater
        type: switch
      - id: temperature
        type: float
        min_value: 0
        max_value: 300
        discretization:
          lower: [50, "cold"]
          intermediate: [50, 150, "warm"]
          upper: [150, "hot"]

sources:
  - id: SM_1Stream
    type: mqtt
    url: ${MQTT_URL}
    client_id: mqtt.SM_1.replay
    topic: FTFactory/SM_1
    content_type: json
    schema:
      ts: string
      i1_light_barrier: int
      i2_color_sensor: int
      m1_speed: int
      o5_valve: int
      o6_valve: int
  - id: MM_1Stream
    type: mqtt
    url: ${MQTT_URL}
    client_id: mqtt.MM_1.replay
    topic: FTFactory/MM_1
    content_type: json
    schema:
      ts: string
      i1_pos_switch: int
      o8_compressor: int
      m1_speed: int
  - id: OV_1Stream
    type: mqtt
    url: ${MQTT_URL}
    client_id: mqtt.OV_1.replay
    topic: FTFactory/OV_1
    content_type: json
    schema:
      ts: string
      i5_door: int
      o7_heater: int
      temperature: float
"""

PROGRAM = """\
// Synthetic smart factory.
Process Production:
  Activity Sort_product:
    Start:
      In SM_1 sensor m1_speed changes_from 0 to -512;
      In SM_1 sensor i1_light_barrier is_equal 1;
    Intermediate:
      In SM_1 sensor i2_color_sensor is_changing;
    End:
      Case:
        In SM_1 sensor o5_valve changes_from open to closed;
      Case:
        In SM_1 sensor o6_valve changes_from open to closed;

  Activity Mill_workpiece:
    Start:
      In MM_1 sensor i1_pos_switch is_equal 1;
      In MM_1 sensor o8_compressor changes_from off to on;
    End:
      In MM_1 sensor m1_speed changes_from 512 to 0;

  Activity Bake_workpiece:
    Start:
      In OV_1 sensor o7_heater changes_from off to on;
      In OV_1 sensor i5_door is_equal closed;
    Intermediate:
      In OV_1 sensor temperature is_equal hot;
    End:
      In OV_1 sensor temperature changes_from hot to warm within 20 seconds;
"""

SM_IDLE = {"i1_light_barrier": 0, "i2_color_sensor": 1850, "m1_speed": 0, "o5_valve": 0, "o6_valve": 0}
MM_IDLE = {"i1_pos_switch": 0, "o8_compressor": 0, "m1_speed": 0}
OV_IDLE = {"i5_door": 0, "o7_heater": 0, "temperature": 20.0}
PERIOD = {"SM_1": 500, "MM_1": 1000, "OV_1": 2000}
COLORS = {"red": (1700, "o5_valve"), "blue": (1760, "o6_valve")}


@dataclass
class Station:
    id: str
    idle: dict
    changes: list[tuple[int, dict]] = field(default_factory=list)
    # Observed activity instances and scripted detections (absolute ms).
    truth: list[tuple[str, int, int]] = field(default_factory=list)
    detections: list[tuple[str, int, int]] = field(default_factory=list)

    def at(self, t: int, **values) -> None:
        self.changes.append((t, values))

    def tick(self, t: int) -> int:
        """First publication at or after ``t``: when a change becomes visible."""
        p = PERIOD[self.id]
        return -(-(t - T0) // p) * p + T0


class Factory:
    def __init__(self, rng: random.Random):
        self.rng = rng
        self.sm = Station("SM_1", SM_IDLE)
        self.mm = Station("MM_1", MM_IDLE)
        self.ov = Station("OV_1", OV_IDLE)

    def jitter(self, lo_s: float, hi_s: float) -> int:
        """Random offset on a 10 ms grid, as a manual logger would introduce."""
        return self.rng.randrange(int(lo_s * 100), int(hi_s * 100) + 1) * 10

    def truth(self, st: Station, activity: str, start: int, end: int) -> None:
        st.truth.append((activity, start + self.jitter(-1.5, 0.5), end + self.jitter(-0.5, 1.5)))

    # -- sorting line ------------------------------------------------------

    def sort(self, b: int, color: str = "red") -> int:
        st = self.sm
        value, valve = COLORS[color]
        st.at(b, m1_speed=-512, i1_light_barrier=1)
        st.at(b + 2 * S, i1_light_barrier=0)
        st.at(b + 4 * S, i2_color_sensor=value)
        st.at(b + 6 * S, i2_color_sensor=SM_IDLE["i2_color_sensor"])
        st.at(b + 8 * S, **{valve: 75})
        st.at(b + 10 * S, m1_speed=0, **{valve: 0})
        self.truth(st, "Sort_product", b, b + 10 * S)
        st.detections.append(("Sort_product", st.tick(b), st.tick(b + 10 * S)))
        return b + 10 * S

    def sort_unseen_color(self, b: int) -> int:
        st = self.sm
        st.at(b, m1_speed=-512, i1_light_barrier=1)
        st.at(b + 2 * S, i1_light_barrier=0)
        st.at(b + 8 * S, o5_valve=75)
        st.at(b + 10 * S, m1_speed=0, o5_valve=0)
        self.truth(st, "Sort_product", b, b + 10 * S)
        return b + 10 * S

    def sort_merged(self, b: int) -> int:
        st = self.sm
        red, valve = COLORS["red"]
        st.at(b, m1_speed=-512, i1_light_barrier=1)
        st.at(b + 2 * S, i1_light_barrier=0)
        st.at(b + 4 * S, i2_color_sensor=red)
        st.at(b + 6 * S, i2_color_sensor=SM_IDLE["i2_color_sensor"])
        st.at(b + 8 * S, **{valve: 75})
        # The second workpiece enters while the belt runs and the valve stays open.
        st.at(b + 10 * S, i1_light_barrier=1)
        st.at(b + 12 * S, i1_light_barrier=0)
        st.at(b + 14 * S, i2_color_sensor=red)
        st.at(b + 16 * S, i2_color_sensor=SM_IDLE["i2_color_sensor"])
        st.at(b + 18 * S, m1_speed=0, **{valve: 0})
        self.truth(st, "Sort_product", b, b + 8 * S)
        self.truth(st, "Sort_product", b + 11 * S, b + 18 * S)
        st.detections.append(("Sort_product", st.tick(b), st.tick(b + 18 * S)))
        return b + 18 * S

    def sort_false_start(self, b: int) -> int:
        st = self.sm
        blue, valve = COLORS["blue"]
        # Test run with a workpiece already in the light barrier.
        st.at(b, m1_speed=-512, i1_light_barrier=1)
        st.at(b + 1 * S, i1_light_barrier=0)
        st.at(b + 3 * S, m1_speed=0)
        # The real run: belt first, workpiece afterwards, so no start fires.
        st.at(b + 8 * S, m1_speed=-512)
        st.at(b + 9 * S, i1_light_barrier=1)
        st.at(b + 11 * S, i1_light_barrier=0)
        st.at(b + 12 * S, i2_color_sensor=blue)
        st.at(b + 14 * S, i2_color_sensor=SM_IDLE["i2_color_sensor"])
        st.at(b + 16 * S, **{valve: 75})
        st.at(b + 18 * S, m1_speed=0, **{valve: 0})
        self.truth(st, "Sort_product", b + 8 * S, b + 18 * S)
        st.detections.append(("Sort_product", st.tick(b), st.tick(b + 18 * S)))
        return b + 18 * S

    # -- milling machine ---------------------------------------------------

    def mill(self, b: int, length_s: int) -> int:
        st = self.mm
        st.at(b, i1_pos_switch=1, o8_compressor=512)
        st.at(b + 2 * S, m1_speed=512)
        st.at(b + 3 * S, i1_pos_switch=0)
        st.at(b + length_s * S, m1_speed=0)
        st.at(b + (length_s + 1) * S, o8_compressor=0)
        self.truth(st, "Mill_workpiece", b, b + (length_s + 1) * S)
        st.detections.append(("Mill_workpiece", st.tick(b), st.tick(b + length_s * S)))
        return b + (length_s + 1) * S

    def mill_aborted(self, b: int) -> int:
        st = self.mm
        st.at(b, i1_pos_switch=1, o8_compressor=512)
        st.at(b + 2 * S, m1_speed=512)
        st.at(b + 4 * S, m1_speed=0)
        st.at(b + 5 * S, o8_compressor=0, i1_pos_switch=0)
        st.detections.append(("Mill_workpiece", st.tick(b), st.tick(b + 4 * S)))
        return b + 5 * S

    # -- oven --------------------------------------------------------------

    def bake(self, b: int, hold_s: int) -> int:
        st = self.ov
        p = PERIOD["OV_1"]
        st.at(b, i5_door=1)
        st.at(b + 4 * S, i5_door=0)
        on = b + 6 * S
        st.at(on, o7_heater=1)
        temp, t = OV_IDLE["temperature"], on
        hot_at = None
        while temp < 200:
            t += p
            temp = min(200.0, temp + 20.0)
            st.at(t, temperature=temp)
            if hot_at is None and temp >= 150:
                hot_at = t
        t += hold_s * S
        st.at(t, o7_heater=0)
        warm_at = None
        while temp > 20:
            t += p
            temp = max(20.0, temp - 15.0)
            st.at(t, temperature=temp)
            if warm_at is None and temp < 150:
                warm_at = t
        st.at(t + p, i5_door=1)
        st.at(t + 3 * p, i5_door=0)
        self.truth(st, "Bake_workpiece", b + 4 * S, warm_at)
        st.detections.append(("Bake_workpiece", st.tick(on), st.tick(warm_at)))
        return t + 3 * p

    def heater_glitch(self, b: int) -> int:
        st = self.ov
        st.at(b, o7_heater=1)
        st.at(b + 3 * S, o7_heater=0)
        return b + 3 * S


def build(instances: dict[str, int], rng: random.Random) -> Factory:
    f = Factory(rng)

    def gap(lo, hi):
        return rng.randrange(lo, hi + 1) * S

    sort_plan = {
        "full": ["red", "blue", "false_start", "red", "merged", "blue", "deleted", "red"],
        "mini": ["red"],
    }[instances["plan"]]
    t = T0 + gap(3, 6)
    for kind in sort_plan:
        if kind == "false_start":
            t = f.sort_false_start(t)
        elif kind == "merged":
            t = f.sort_merged(t)
        elif kind == "deleted":
            t = f.sort_unseen_color(t)
        else:
            t = f.sort(t, kind)
        t += gap(12, 25)

    mill_plan = {"full": [18, 24, "aborted", 20, 30, 16, 22, 26], "mini": [18]}[instances["plan"]]
    t = T0 + gap(2, 8)
    for kind in mill_plan:
        t = f.mill_aborted(t) if kind == "aborted" else f.mill(t, kind)
        t += gap(10, 20)

    oven_plan = {"full": [20, "glitch", 10, 30, 16, 24, 12], "mini": [10]}[instances["plan"]]
    t = T0 + gap(1, 5)
    for kind in oven_plan:
        t = f.heater_glitch(t) if kind == "glitch" else f.bake(t, kind)
        t += gap(8, 16)
    return f


def snapshots(st: Station, end: int, rng: random.Random) -> list[dict]:
    changes = sorted(st.changes, key=lambda c: c[0])
    values = dict(st.idle)
    out, k = [], 0
    for t in range(T0, end + 1, PERIOD[st.id]):
        while k < len(changes) and changes[k][0] <= t:
            values.update(changes[k][1])
            k += 1
        stamp = datetime.fromtimestamp(t / 1000, tz=timezone.utc).strftime("%Y-%m-%d %H:%M:%S.%f")[:-4]
        payload = {"id": str(uuid.UUID(int=rng.getrandbits(128), version=4)), "station": st.id, "ts": stamp}
        payload.update(values)
        out.append(payload)
    return out


def interval_records(items) -> list[dict]:
    return [
        {"activity": a, "ts_start": format_ts(s), "ts_end": format_ts(e)}
        for a, s, e in sorted(items, key=lambda x: (x[1], x[2], x[0]))
    ]


def write_jsonl(path: Path, rows) -> None:
    path.write_text("".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8")


def generate(out: Path, plan: str = "full", seed: int = SEED) -> dict:
    rng = random.Random(seed)
    f = build({"plan": plan}, rng)
    stations = (f.sm, f.mm, f.ov)
    end = max(c[0] for st in stations for c in st.changes) + 5 * S
    out.mkdir(parents=True, exist_ok=True)
    (out / "factory.yaml").write_text(CONFIG, encoding="utf-8")
    (out / "factory.rad").write_text(PROGRAM, encoding="utf-8")
    n_events = 0
    for st in stations:
        rows = snapshots(st, end, rng)
        n_events += len(rows)
        write_jsonl(out / f"{st.id}.jsonl", rows)
    truth = interval_records([x for st in stations for x in st.truth])
    # Detections are emitted when they complete; ties follow the merged
    # timeline, which orders simultaneous events by station id.
    emitted = sorted(
        ((e, st.id, a, s) for st in stations for a, s, e in st.detections),
        key=lambda x: (x[0], x[1]),
    )
    expected = [
        {"process": "Production", "activity": a, "ts_start": format_ts(s), "ts_end": format_ts(e)}
        for e, _, a, s in emitted
    ]
    write_jsonl(out / "ground_truth.jsonl", truth)
    write_jsonl(out / "expected_detections.jsonl", expected)
    gt = intervals_from_records(truth)
    det = intervals_from_records(expected)
    for mode in ("micro", "macro"):
        report = report_oracle(gt, det, frame_ms=100, mode=mode)
        (out / f"oracle_report_{mode}.json").write_text(report.to_json(), encoding="utf-8")
    return {"events": n_events, "ground_truth": len(truth), "detections": len(expected)}


def main(argv: list[str]) -> None:
    base = Path(argv[1]) if len(argv) > 1 else ROOT / "tests" / "fixtures"
    for plan in ("full", "mini"):
        info = generate(base / ("factory" if plan == "full" else "factory_mini"), plan)
        print(plan, info)


if __name__ == "__main__":
    main(sys.argv)
