from __future__ import annotations

import json
import subprocess
import sys

import pytest

from radiant.cli import main

from conftest import DATA, FIXTURES

MINI = FIXTURES / "factory_mini"
FULL = FIXTURES / "factory"
LISTING10 = str(DATA / "listing10.rad")
PRODUCTION = str(DATA / "production.yaml")


def replay_args(fixture):
    return [f"--input={st}={fixture / (st + '.jsonl')}" for st in ("SM_1", "MM_1", "OV_1")]


class TestCheck:
    def test_ok(self, capsys):
        assert main(["check", LISTING10, PRODUCTION]) == 0
        assert main(["check", str(DATA / "listing11.rad"), str(DATA / "healthcare.yaml")]) == 0

    def test_diagnostics_exit_1(self, tmp_path, capsys):
        prog = tmp_path / "bad.rad"
        prog.write_text("Process P:\n  Activity A:\n    Start: In SM_1 sensor m1_speed is_equal 9999;\n    End: In SM_1 sensor m1_speed is_equal 0;\n")
        assert main(["check", str(prog), PRODUCTION]) == 1
        err = capsys.readouterr().err
        assert f"{prog}:3:" in err and "error" in err

    def test_missing_file_exit_2(self, capsys):
        assert main(["check", LISTING10, "nope.yaml"]) == 2
        assert "nope.yaml" in capsys.readouterr().err

    def test_bad_config_exit_1(self, tmp_path, capsys):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("stations: []\nsources: []\n")
        assert main(["check", LISTING10, str(cfg)]) == 1

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["check"])
        assert exc.value.code == 2


class TestCompile:
    def test_writes_specs_and_queries(self, tmp_path, capsys):
        out = tmp_path / "new" / "dir"
        assert main(["compile", LISTING10, PRODUCTION, "--out", str(out), "--emit-sql"]) == 0
        names = sorted(p.name for p in out.iterdir())
        assert names == [
            "Production.Mill_workpiece.json",
            "Production.Mill_workpiece.siddhi",
            "Production.Sort_product.json",
            "Production.Sort_product.siddhi",
        ]
        assert (out / "Production.Sort_product.siddhi").read_text().startswith("@App:name('Production-Sort product')")

    def test_only_json_without_flag(self, tmp_path, capsys):
        assert main(["compile", LISTING10, PRODUCTION, "-o", str(tmp_path)]) == 0
        assert sorted(p.suffix for p in tmp_path.iterdir()) == [".json", ".json"]

    def test_nothing_written_on_error(self, tmp_path, capsys):
        prog = tmp_path / "bad.rad"
        prog.write_text("Process P: Activity A: Start: In XX sensor y is_equal 1; End: In XX sensor y is_equal 0;")
        out = tmp_path / "out"
        assert main(["compile", str(prog), PRODUCTION, "--out", str(out)]) == 1
        assert not out.exists()


class TestRun:
    def test_mini_fixture(self, tmp_path, capsys):
        out, xes = tmp_path / "det.jsonl", tmp_path / "det.xes"
        code = main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), *replay_args(MINI), "--out", str(out), "--xes", str(xes)])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["detections"] == 3
        assert out.read_text() == (MINI / "expected_detections.jsonl").read_text()
        assert xes.read_text().count("<event>") == 6

    def test_precompiled_specs(self, tmp_path, capsys):
        specs = tmp_path / "specs"
        assert main(["compile", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), "--out", str(specs)]) == 0
        out = tmp_path / "det.jsonl"
        assert main(["run", str(specs), str(MINI / "factory.yaml"), *replay_args(MINI), "--out", str(out)]) == 0
        assert out.read_text() == (MINI / "expected_detections.jsonl").read_text()

    def test_patterns_output(self, tmp_path, capsys):
        patterns = tmp_path / "p.jsonl"
        assert main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), *replay_args(MINI), "--patterns", str(patterns)]) == 0
        kinds = {json.loads(line)["event"] for line in patterns.read_text().splitlines()}
        assert {"StartPattern", "EndPattern"} <= kinds

    def test_needs_input(self, capsys):
        assert main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml")]) == 2

    def test_missing_input_file(self, capsys):
        assert main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), "-i", "SM_1=missing.jsonl"]) == 2

    def test_bad_timestamp_is_domain_error(self, tmp_path, capsys):
        bad = tmp_path / "SM_1.jsonl"
        bad.write_text('{"ts": "yesterday", "m1_speed": 0}\n')
        assert main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), f"-i=SM_1={bad}"]) == 1
        assert "SM_1.jsonl:1" in capsys.readouterr().err

    def test_live_without_broker_url(self, capsys, monkeypatch):
        monkeypatch.delenv("MQTT_URL", raising=False)
        assert main(["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), "--mode", "live"]) == 1

    def test_live_unreachable_broker(self, capsys):
        code = main(
            ["run", str(MINI / "factory.rad"), str(MINI / "factory.yaml"), "--mode", "live",
             "--broker", "tcp://127.0.0.1:9", "--connect-timeout", "0.5"]
        )
        assert code == 2


class TestEval:
    def test_identical_logs(self, capsys):
        gt = str(FULL / "ground_truth.jsonl")
        assert main(["eval", gt, gt]) == 0
        headline = json.loads(capsys.readouterr().out)
        assert headline["two_set"]["f1"] == 1.0
        assert headline["event_analysis"]["f1"] == 1.0
        assert headline["cross_correlation"] == 1.0
        assert headline["damerau_levenshtein_norm"] == 0.0

    @pytest.mark.parametrize("mode", ["micro", "macro"])
    def test_fixture_report_matches_oracle(self, mode, tmp_path, capsys):
        report = tmp_path / "report.json"
        args = ["eval", str(FULL / "expected_detections.jsonl"), str(FULL / "ground_truth.jsonl"), "--mode", mode, "--report", str(report)]
        assert main(args) == 0
        assert report.read_bytes() == (FULL / f"oracle_report_{mode}.json").read_bytes()

    def test_macro_differs_from_micro(self, capsys):
        heads = []
        for mode in ("micro", "macro"):
            main(["eval", str(FULL / "expected_detections.jsonl"), str(FULL / "ground_truth.jsonl"), "--mode", mode])
            heads.append(json.loads(capsys.readouterr().out))
        assert heads[0]["two_set"] != heads[1]["two_set"]

    def test_csv_and_table(self, tmp_path, capsys):
        csv = tmp_path / "r.csv"
        args = ["eval", str(FULL / "expected_detections.jsonl"), str(FULL / "ground_truth.jsonl"), "--csv", str(csv), "--pretty"]
        assert main(args) == 0
        assert "Sort_product" in capsys.readouterr().out
        assert csv.read_text().splitlines()[0].startswith("activity,ts_precision")

    def test_overlapping_gt(self, tmp_path, capsys):
        gt = tmp_path / "gt.jsonl"
        gt.write_text(
            '{"activity": "a", "ts_start": "2023-01-30 13:00:00", "ts_end": "2023-01-30 13:00:10"}\n'
            '{"activity": "a", "ts_start": "2023-01-30 13:00:05", "ts_end": "2023-01-30 13:00:15"}\n'
        )
        assert main(["eval", str(FULL / "expected_detections.jsonl"), str(gt)]) == 1
        assert "overlap" in capsys.readouterr().err


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "radiant.cli", "check", LISTING10, PRODUCTION], capture_output=True, text=True
    )
    assert proc.returncode == 0, proc.stderr
