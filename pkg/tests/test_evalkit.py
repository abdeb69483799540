from __future__ import annotations

import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radiant.evalkit import (
    EventCounts,
    FrameCounts,
    Interval,
    IntervalLog,
    LogError,
    OverlapError,
    cross_correlation,
    damerau_levenshtein,
    damerau_levenshtein_norm,
    evaluate,
    event_analysis,
    intervals_from_records,
    rasterize,
    render_table,
    report_csv,
    segment_and_count,
    shared_bounds,
    standard_scores,
)

from oracles import (
    dl_norm_oracle,
    dl_oracle,
    event_counts_oracle,
    frame_counts_oracle,
    raster_oracle,
    report_oracle,
    xcorr_oracle,
)

ACTIVITIES = ("mill", "sort", "store")
S = 1_000


def log(*triples):
    return IntervalLog([Interval(a * S, b * S, act) for act, a, b in triples])


def random_log(rng, max_intervals=10, span=20_000):
    entries = []
    for activity in ACTIVITIES:
        k = rng.randint(0, max_intervals // len(ACTIVITIES) + 1)
        cuts = sorted(rng.sample(range(0, span + 1, 10), 2 * k))
        entries += [Interval(cuts[2 * i], cuts[2 * i + 1], activity) for i in range(k)]
    return IntervalLog(entries[:max_intervals])


def random_pair(seed):
    rng = random.Random(seed)
    while True:
        gt, det = random_log(rng), random_log(rng)
        if len(gt) or len(det):
            return gt, det


def swap_frames(c):
    return FrameCounts(c.tp, c.tn, c.deletion, c.fragmentation, c.underfill, c.insertion, c.merge, c.overfill)


class TestExamples:
    def test_perfect_match(self):
        gt = log(("a", 10, 20))
        c = segment_and_count(gt, gt, "a", (10 * S, 20 * S))
        assert (c.tp, c.fp, c.fn) == (10_000, 0, 0)

    def test_underfill(self):
        c = segment_and_count(log(("a", 10, 20)), log(("a", 12, 18)), "a", (10 * S, 20 * S))
        assert (c.tp, c.underfill, c.fn, c.fp) == (6_000, 4_000, 4_000, 0)

    def test_merge(self):
        gt, det = log(("a", 10, 20), ("a", 30, 40)), log(("a", 10, 40))
        c = segment_and_count(gt, det, "a", (10 * S, 40 * S))
        assert (c.merge, c.fp) == (10_000, 10_000)

    def test_fragmentation_and_insertion(self):
        gt, det = log(("a", 10, 40)), log(("a", 10, 20), ("a", 30, 40), ("a", 50, 60))
        c = segment_and_count(gt, det, "a", (10 * S, 60 * S))
        assert (c.fragmentation, c.insertion, c.tn) == (10_000, 10_000, 10_000)

    def test_event_classes(self):
        one = log(("a", 0, 10))
        ec = event_analysis(one, one, "a")
        assert (ec.gt["correct"], ec.det["correct"]) == (1, 1)
        assert standard_scores(ec).f1 == 1.0

        frag = event_analysis(one, log(("a", 0, 4), ("a", 6, 10)), "a")
        assert frag.gt["fragmented"] == 1 and frag.det["fragmenting"] == 2
        s = standard_scores(frag)
        assert (s.precision, s.recall) == (0.0, 0.0)

        ins = event_analysis(log(), log(("a", 0, 1)), "a")
        assert ins.det["inserted"] == 1

    def test_scores_formula(self):
        s = standard_scores(FrameCounts(tp=1, insertion=1))
        assert (s.precision, s.recall) == (0.5, 1.0)
        assert s.f1 == pytest.approx(2 / 3)

    def test_degenerate_scores(self):
        s = standard_scores(FrameCounts(tn=5_000))
        assert s.precision == 0.0 and "precision" in s.undefined
        assert s.balanced_accuracy == 0.5

    def test_xcorr_examples(self):
        g = np.array([0, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0])
        assert cross_correlation(g, g).score == 1.0
        shifted = np.roll(g, 5)
        c = cross_correlation(g, shifted)
        assert (c.score, c.lag) == (1.0, 5)
        assert cross_correlation(shifted, g).lag == -5

    def test_xcorr_half_overlap(self):
        gt, det = log(("a", 0, 10)), log(("a", 5, 15))
        bounds = shared_bounds(gt, det)
        g, d = rasterize(gt.of("a"), bounds, 100), rasterize(det.of("a"), bounds, 100)
        assert cross_correlation(g, d, max_lag=0).score == pytest.approx(0.5)
        best = cross_correlation(g, d)
        assert (best.score, best.lag) == (1.0, 50)

    def test_xcorr_zero_signal(self):
        c = cross_correlation(np.zeros(5), np.ones(5))
        assert c.score == 0.0 and c.undefined

    def test_dl_examples(self):
        assert damerau_levenshtein_norm(["store", "mill", "sort"], ["store", "mill", "sort"]) == 0
        assert damerau_levenshtein_norm(["store", "mill", "sort"], ["store", "sort", "mill"]) == pytest.approx(1 / 3)
        assert damerau_levenshtein_norm(["a", "b"], []) == 1.0
        assert damerau_levenshtein_norm([], []) == 0.0

    def test_one_activity_micro_equals_macro(self):
        gt, det = log(("a", 0, 10), ("a", 20, 30)), log(("a", 2, 12), ("a", 14, 16))
        micro, macro = evaluate(gt, det, mode="micro"), evaluate(gt, det, mode="macro")
        assert micro.two_set == macro.two_set
        assert micro.event_analysis == macro.event_analysis
        assert micro.cross_correlation == pytest.approx(macro.cross_correlation)

    def test_two_activity_masses(self):
        # "light" is perfect over 10 s, "heavy" is missed entirely over 90 s.
        gt = log(("light", 0, 10), ("heavy", 10, 100))
        det = log(("light", 0, 10), ("heavy", 100, 190))
        macro = evaluate(gt, det, mode="macro")
        micro = evaluate(gt, det, mode="micro")
        assert macro.two_set.f1 == pytest.approx(0.5)
        assert micro.two_set.f1 == pytest.approx(0.1)


class TestLogs:
    def test_overlap_rejected(self):
        with pytest.raises(OverlapError) as exc:
            intervals_from_records(
                [
                    {"activity": "a", "ts_start": 0, "ts_end": 10},
                    {"activity": "a", "ts_start": 5, "ts_end": 15},
                ],
                "gt.jsonl",
            )
        assert "gt.jsonl" in str(exc.value) and len(exc.value.offenders) == 1

    def test_other_activities_may_overlap(self):
        assert len(log(("a", 0, 10), ("b", 5, 15))) == 2

    def test_zero_length_skipped(self):
        got = intervals_from_records([{"activity": "a", "ts_start": "2023-01-30 13:00:00", "ts_end": "2023-01-30 13:00:00"}])
        assert len(got) == 0 and got.warnings

    def test_reversed_rejected(self):
        with pytest.raises(LogError):
            intervals_from_records([{"activity": "a", "ts_start": 10, "ts_end": 5}])

    def test_missing_field(self):
        with pytest.raises(LogError, match="ts_end"):
            intervals_from_records([{"activity": "a", "ts_start": 10}])


class TestOracleEquivalence:
    def test_random_arrangements(self):
        for seed in range(500):
            gt, det = random_pair(seed)
            bounds = shared_bounds(gt, det)
            for activity in ACTIVITIES:
                assert segment_and_count(gt, det, activity, bounds) == frame_counts_oracle(gt, det, activity, bounds), seed
                assert event_analysis(gt, det, activity) == event_counts_oracle(gt, det, activity), seed

    @settings(max_examples=300, deadline=None)
    @given(
        a=st.lists(st.sampled_from("abcd"), max_size=9),
        b=st.lists(st.sampled_from("abcd"), max_size=9),
    )
    def test_dl(self, a, b):
        assert damerau_levenshtein(a, b) == dl_oracle(a, b)
        assert damerau_levenshtein_norm(a, b) == dl_norm_oracle(a, b)

    @settings(max_examples=300, deadline=None)
    @given(
        a=st.lists(st.sampled_from("abc"), max_size=6),
        b=st.lists(st.sampled_from("abc"), max_size=6),
        c=st.lists(st.sampled_from("abc"), max_size=6),
    )
    def test_dl_metric_properties(self, a, b, c):
        assert (damerau_levenshtein(a, b) == 0) == (a == b)
        assert damerau_levenshtein(a, b) == damerau_levenshtein(b, a)
        assert damerau_levenshtein(a, c) <= damerau_levenshtein(a, b) + damerau_levenshtein(b, c)
        assert 0.0 <= damerau_levenshtein_norm(a, b) <= 1.0

    @settings(max_examples=300, deadline=None)
    @given(
        g=st.lists(st.integers(0, 1), min_size=1, max_size=60),
        data=st.data(),
    )
    def test_xcorr(self, g, data):
        d = data.draw(st.lists(st.integers(0, 1), min_size=len(g), max_size=len(g)))
        max_lag = data.draw(st.none() | st.integers(0, len(g) + 2))
        got = cross_correlation(np.array(g), np.array(d), max_lag)
        want = xcorr_oracle(g, d, max_lag)
        assert abs(got.score - want.score) <= 1e-9
        assert (got.lag, got.undefined) == (want.lag, want.undefined)

    @settings(max_examples=200, deadline=None)
    @given(
        bounds=st.tuples(st.integers(-5_000, 5_000), st.integers(1, 20_000)).map(lambda t: (t[0], t[0] + t[1])),
        frame_ms=st.integers(1, 700),
        seed=st.integers(0, 2**32 - 1),
    )
    def test_rasterize(self, bounds, frame_ms, seed):
        rng = random.Random(seed)
        cuts = sorted(rng.sample(range(bounds[0], bounds[1] + 1), min(6, bounds[1] - bounds[0] + 1) // 2 * 2))
        intervals = [Interval(cuts[i], cuts[i + 1], "a") for i in range(0, len(cuts), 2) if cuts[i] < cuts[i + 1]]
        assert rasterize(intervals, bounds, frame_ms).tolist() == raster_oracle(intervals, bounds, frame_ms)

    @pytest.mark.parametrize("mode", ["micro", "macro"])
    def test_full_report(self, mode):
        for seed in range(60):
            gt, det = random_pair(1_000 + seed)
            frame_ms = random.Random(seed).choice((10, 50, 100, 250))
            got = evaluate(gt, det, frame_ms=frame_ms, mode=mode).to_json()
            assert got == report_oracle(gt, det, frame_ms=frame_ms, mode=mode).to_json(), seed


class TestProperties:
    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_conservation_and_partition(self, seed):
        gt, det = random_pair(seed)
        bounds = shared_bounds(gt, det)
        for activity in ACTIVITIES:
            c = segment_and_count(gt, det, activity, bounds)
            assert c.total == bounds[1] - bounds[0]
            ec = event_analysis(gt, det, activity)
            assert ec.n_gt == len(gt.of(activity)) and ec.n_det == len(det.of(activity))

    @settings(max_examples=200, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_swap_symmetry(self, seed):
        gt, det = random_pair(seed)
        bounds = shared_bounds(gt, det)
        for activity in ACTIVITIES:
            fwd = segment_and_count(gt, det, activity, bounds)
            assert segment_and_count(det, gt, activity, bounds) == swap_frames(fwd)
            a, b = standard_scores(fwd), standard_scores(swap_frames(fwd))
            assert (a.precision, a.recall, a.f1) == (b.recall, b.precision, b.f1)
            ea = event_analysis(gt, det, activity)
            back = event_analysis(det, gt, activity)
            mirror = {
                "correct": "correct",
                "deleted": "inserted",
                "fragmented": "merging",
                "merged": "fragmenting",
                "fragmented_and_merged": "fragmenting_and_merging",
            }
            assert {k: ea.det[v] for k, v in mirror.items()} == back.gt

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), mode=st.sampled_from(["micro", "macro"]))
    def test_scores_in_unit_interval(self, seed, mode):
        gt, det = random_pair(seed)
        report = evaluate(gt, det, frame_ms=100, mode=mode)
        values = [report.cross_correlation, report.damerau_levenshtein_norm]
        for s in [report.two_set, report.event_analysis] + [r.two_set for r in report.per_activity]:
            values += [s.precision, s.recall, s.f1]
        values.append(report.two_set.balanced_accuracy)
        assert all(0.0 <= v <= 1.0 for v in values)
        assert report.event_analysis.balanced_accuracy is None

    def test_identical_logs(self):
        gt, _ = random_pair(7)
        while not len(gt):
            gt, _ = random_pair(8)
        r = evaluate(gt, gt)
        assert (r.two_set.f1, r.event_analysis.f1, r.cross_correlation, r.damerau_levenshtein_norm) == (1.0, 1.0, 1.0, 0.0)


class TestTableArithmetic:
    def test_f1_from_table2_counts(self):
        counts = FrameCounts(tp=20_738_792, tn=1_000_000, insertion=38_821_208, deletion=14_081_208)
        s = standard_scores(counts)
        assert round(s.precision, 4) == 0.3482
        assert round(s.recall, 4) == 0.5956
        assert abs(s.f1 - 0.4395) <= 1e-4

    def test_skewed_micro_below_macro(self):
        # A rare, well-detected activity and a dominant, poorly detected one.
        gt = log(("rare", 0, 5), ("common", 10, 110))
        det = log(("rare", 0, 5), ("common", 60, 160))
        micro, macro = evaluate(gt, det, mode="micro"), evaluate(gt, det, mode="macro")
        assert micro.two_set.f1 < macro.two_set.f1


class TestRendering:
    def test_csv_and_table(self):
        gt = log(("mill", 0, 10), ("sort", 5, 20))
        det = log(("mill", 1, 11), ("sort", 30, 35))
        report = evaluate(gt, det)
        lines = report_csv(report).splitlines()
        assert len(lines) == 1 + 2 + 1
        assert lines[-1].startswith("ALL (micro)")
        table = render_table(report)
        assert "mill" in table and "sort" in table

    def test_json_rounded(self):
        gt = log(("mill", 0, 3))
        det = log(("mill", 1, 4))
        text = evaluate(gt, det).to_json()
        assert text.endswith("\n")
        assert "0.666667" in text
        assert not math.isnan(evaluate(gt, det).two_set.f1)


def test_empty_logs_rejected():
    with pytest.raises(LogError):
        evaluate(IntervalLog(), IntervalLog())


def test_event_counts_add():
    a = EventCounts()
    a.gt["correct"] = 2
    assert (a + a).gt["correct"] == 4
