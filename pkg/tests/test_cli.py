"""
Tests for the command-line surface.
"""
import json
import math

import pytest
from dateutil import parser

from src.cli.commands import main
from src.privacy.accountant import DEFAULT_LAMBDA_GRID


def run_json(capsys, argv):
    code = main(argv)
    return code, json.loads(capsys.readouterr().out) if code == 0 else None


class TestAccount:

    def test_empty_stream(self, capsys, distance_stream):
        path = distance_stream([])
        code, output = run_json(capsys, ["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5"])
        assert code == 0
        (report,) = output["reports"]
        assert report["epsilon"] == pytest.approx(-math.log(1e-5) / DEFAULT_LAMBDA_GRID[-1], rel=1e-12)
        assert report["steps"] == 0
        assert output["config"]["sigma"] == 1.0

    def test_full_sampling_single_step(self, capsys, distance_stream):
        path = distance_stream([(1, [1.0] * 10)])
        code, output = run_json(capsys, ["account", path, "--sigma", "2", "--q", "1", "--delta", "1e-5",
                                         "--clip", "1", "--mode", "ma"])
        assert code == 0
        lams = DEFAULT_LAMBDA_GRID
        expected = min((lam * (lam + 1) / (2 * 4.0) - math.log(1e-5)) / lam for lam in lams)
        assert output["reports"][0]["epsilon"] == pytest.approx(expected, rel=1e-9)

    def test_both_modes(self, capsys, distance_stream):
        path = distance_stream([(step, [0.1 * (i % 7) for i in range(100)]) for step in range(1, 21)])
        code, output = run_json(capsys, ["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5",
                                         "--clip", "1", "--mode", "both"])
        assert code == 0
        reports = {r["mode"]: r for r in output["reports"]}
        assert reports["bdp"]["epsilon"] <= reports["ma"]["epsilon"]

    def test_trace_and_ledger_outputs(self, capsys, distance_stream, tmp_path):
        path = distance_stream([(1, [0.5] * 10), (2, [0.2] * 10)])
        trace = tmp_path / "trace.csv"
        ledger = tmp_path / "ledger.json"
        code = main(["account", path, "--sigma", "1", "--q", "0.1", "--delta", "1e-5", "--clip", "1",
                     "--mode", "both", "--trace", str(trace), "--ledger-out", str(ledger)])
        assert code == 0
        rows = trace.read_text(encoding="utf-8").splitlines()
        assert rows[0].startswith("step,epsilon_dp")
        assert len(rows) == 3
        assert (tmp_path / "ledger.ma.json").exists()
        assert (tmp_path / "ledger.bdp.json").exists()

    def test_parse_failure(self, tmp_path, caplog):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"distances": [1.0, 2.0]}\n{"distances": \n', encoding="utf-8")
        code = main(["account", str(path), "--sigma", "1", "--q", "0.01", "--delta", "1e-5"])
        assert code == 2
        assert "line 2" in caplog.text

    def test_exhausted_budget(self, distance_stream):
        path = distance_stream([(s, [0.5, 0.5]) for s in range(1, 11)])
        code = main(["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5", "--gamma", "1e-5"])
        assert code == 3

    def test_missing_required_option(self, distance_stream):
        assert main(["account", distance_stream([]), "--q", "0.01", "--delta", "1e-5"]) == 2

    def test_ma_without_clip(self, distance_stream):
        path = distance_stream([])
        assert main(["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5", "--mode", "ma"]) == 2

    def test_config_file_under_flags(self, capsys, distance_stream, tmp_path):
        config = tmp_path / "run.json"
        config.write_text(json.dumps({"sigma": 3.0, "q": 0.01, "delta": 1e-6}), encoding="utf-8")
        code, output = run_json(capsys, ["account", distance_stream([]), "--config", str(config),
                                         "--delta", "1e-5"])
        assert code == 0
        assert output["config"]["sigma"] == 3.0
        assert output["config"]["delta"] == 1e-5


class TestConvert:

    @pytest.fixture
    def ledger_path(self, distance_stream, tmp_path):
        path = distance_stream([(s, [0.5] * 20) for s in range(1, 11)])
        ledger = tmp_path / "ledger.json"
        assert main(["account", path, "--sigma", "1", "--q", "0.05", "--delta", "1e-5", "--clip", "1",
                     "--mode", "ma", "--ledger-out", str(ledger), "--out", str(tmp_path / "r.json")]) == 0
        return str(ledger)

    def test_round_trip(self, capsys, ledger_path):
        _, by_delta = run_json(capsys, ["convert", "--ledger", ledger_path, "--delta", "1e-5"])
        epsilon = by_delta["reports"][0]["epsilon"]
        _, by_epsilon = run_json(capsys, ["convert", "--ledger", ledger_path, "--epsilon", repr(epsilon)])
        delta = by_epsilon["reports"][0]["delta"]
        _, again = run_json(capsys, ["convert", "--ledger", ledger_path, "--delta", repr(delta)])
        assert again["reports"][0]["epsilon"] <= epsilon + 1e-12

    def test_echoes_ledger_timestamp(self, capsys, ledger_path):
        _, output = run_json(capsys, ["convert", "--ledger", ledger_path, "--delta", "1e-5"])
        saved_at = parser.isoparse(output["ledger_saved_at"])
        assert saved_at.tzinfo is not None
        assert output["reports"][0]["mode"] == "ma"

    def test_zero_epsilon_caps_delta(self, capsys, ledger_path):
        _, output = run_json(capsys, ["convert", "--ledger", ledger_path, "--epsilon", "0"])
        assert output["reports"][0]["delta"] == 1.0

    def test_needs_exactly_one_target(self, ledger_path):
        with pytest.raises(SystemExit) as info:
            main(["convert", "--ledger", ledger_path])
        assert info.value.code == 2
        with pytest.raises(SystemExit) as info:
            main(["convert", "--ledger", ledger_path, "--delta", "1e-5", "--epsilon", "1"])
        assert info.value.code == 2

    def test_budget_boundary(self, distance_stream, tmp_path):
        path = distance_stream([(s, [0.5, 0.5]) for s in range(1, 5)])
        ledger = tmp_path / "bdp.json"
        assert main(["account", path, "--sigma", "1", "--q", "0.01", "--delta", "0.9", "--gamma", "0.125",
                     "--ledger-out", str(ledger), "--out", str(tmp_path / "r.json")]) == 0
        # four steps at gamma 1/8 spend exactly 0.5
        assert main(["convert", "--ledger", str(ledger), "--delta", "0.5"]) == 3


class TestFileErrors:

    @pytest.fixture
    def blocker(self, tmp_path):
        path = tmp_path / "blocker"
        path.write_text("not a directory", encoding="utf-8")
        return path

    def test_unwritable_out(self, distance_stream, blocker, caplog):
        path = distance_stream([(1, [0.5, 0.5])])
        code = main(["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5", "--clip", "1",
                     "--out", str(blocker / "report.json")])
        assert code == 2
        assert "blocker" in caplog.text

    def test_unwritable_trace(self, distance_stream, blocker, tmp_path):
        path = distance_stream([(1, [0.5, 0.5])])
        code = main(["account", path, "--sigma", "1", "--q", "0.01", "--delta", "1e-5", "--clip", "1",
                     "--trace", str(blocker / "trace.csv"), "--out", str(tmp_path / "r.json")])
        assert code == 2


class TestAttackProb:

    @pytest.mark.parametrize("epsilon,shown", [("0", "0.5"), ("2.18", "0.8984"), ("8.0", "0.9997")])
    def test_probability(self, capsys, epsilon, shown):
        assert main(["attack-prob", "--epsilon", epsilon]) == 0
        assert capsys.readouterr().out.strip() == shown

    def test_percent(self, capsys):
        assert main(["attack-prob", "--epsilon", "2.18", "--percent"]) == 0
        assert capsys.readouterr().out.strip() == "89.84%"


class TestSimulate:

    def test_byte_identical_reruns(self, tmp_path):
        first, second = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (first, second):
            assert main(["simulate", "--preset", "fig3", "--steps", "20", "--seed", "7", "--out", str(out)]) == 0
        assert first.read_bytes() == second.read_bytes()
        meta = json.loads((tmp_path / "a.csv.meta.json").read_text(encoding="utf-8"))
        assert meta["preset"] == "fig3"
        assert meta["seed"] == 7

    def test_custom_plan(self, tmp_path):
        out = tmp_path / "custom.csv"
        assert main(["simulate", "--clip-quantile", "0.9", "--steps", "5", "--lambda-max", "32",
                     "--out", str(out)]) == 0
        rows = out.read_text(encoding="utf-8").splitlines()
        assert rows[0] == "point,step,epsilon_dp,epsilon_bdp,delta,lambda_star_dp,lambda_star_bdp"
        assert len(rows) == 6

    def test_unknown_preset(self):
        with pytest.raises(SystemExit) as info:
            main(["simulate", "--preset", "fig9"])
        assert info.value.code == 2


class TestCalibrate:

    def test_prints_sigma(self, capsys):
        code, output = run_json(capsys, ["calibrate", "--q", "0.01", "--steps", "100",
                                         "--target-epsilon", "1.0", "--delta", "1e-5"])
        assert code == 0
        assert output["sigma"] > 0
