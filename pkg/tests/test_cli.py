import csv
import json

import pytest

from beaconswarm.cli import main
from beaconswarm.config import scenario_config
from beaconswarm.engine import EventLog


def small_config_dict(n=10, horizon=30, seed=0, scenario="empty"):
    data = scenario_config(scenario).to_dict()
    data["params"]["n_agents"] = n
    data["params"]["horizon_steps"] = horizon
    data["params"]["seed"] = seed
    return data


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(small_config_dict()))
    return str(path)


class TestRun:
    def test_smoke(self, small_config, tmp_path, capsys):
        out = tmp_path / "out"
        rc = main(["run", "--config", small_config, "--out", str(out)])
        assert rc == 0
        printed = capsys.readouterr().out
        assert "t_conv" in printed and "final beacons" in printed
        logs = list(out.glob("*.jsonl"))
        assert len(logs) == 1
        EventLog.load(logs[0])  # parses cleanly

    def test_seed_override_changes_log(self, small_config, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", small_config, "--out", str(out), "--seed", "7"]) == 0
        assert main(["run", "--config", small_config, "--out", str(out), "--seed", "8"]) == 0
        a = (out / "run_small_seed7.jsonl").read_text()
        b = (out / "run_small_seed8.jsonl").read_text()
        assert a != b

    def test_scenario_with_size_override(self, tmp_path, capsys):
        # full default horizon would be slow; a config file override keeps it short
        path = tmp_path / "tiny.json"
        path.write_text(json.dumps(small_config_dict(n=6, horizon=10)))
        rc = main(["run", "--config", str(path), "--n", "4", "--out", str(tmp_path / "o")])
        assert rc == 0
        assert "N = 4 (flag)" in capsys.readouterr().out

    def test_malformed_config_exits_1_without_outputs(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{ not json")
        out = tmp_path / "out"
        rc = main(["run", "--config", str(bad), "--out", str(out)])
        assert rc == 1
        assert "bad.json:1" in capsys.readouterr().err
        assert not out.exists()

    def test_invalid_field_value_exits_1(self, tmp_path):
        data = small_config_dict()
        data["params"]["epsilon"] = 3.0
        path = tmp_path / "eps.json"
        path.write_text(json.dumps(data))
        assert main(["run", "--config", str(path)]) == 1

    def test_missing_selector_exits_1(self):
        assert main(["run"]) == 1

    def test_unknown_scenario_exits_1(self):
        assert main(["run", "--scenario", "volcano"]) == 1


class TestBatch:
    def _sweep(self, tmp_path):
        sweep = {
            "base": small_config_dict(n=8, horizon=30),
            "sizes": [5, 8],
            "seeds": [0, 1],
            "scenarios": ["empty"],
        }
        path = tmp_path / "sweep.json"
        path.write_text(json.dumps(sweep))
        return str(path)

    def test_row_counts_and_determinism(self, tmp_path):
        sweep = self._sweep(tmp_path)
        out = tmp_path / "batch"
        assert main(["batch", "--config", sweep, "--out", str(out)]) == 0
        first = (out / "metrics.csv").read_bytes()
        with open(out / "metrics.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        kinds = [r["kind"] for r in rows]
        assert kinds.count("run") == 4
        assert kinds.count("aggregate") == 2
        assert kinds.count("baseline") == 2
        assert len(list((out / "logs").glob("*.jsonl"))) == 4
        assert len(list((out / "entropy").glob("*.csv"))) == 4
        # identical rerun reproduces the CSV byte for byte
        assert main(["batch", "--config", sweep, "--out", str(out)]) == 0
        assert (out / "metrics.csv").read_bytes() == first

    def test_parallel_matches_serial(self, tmp_path):
        sweep = self._sweep(tmp_path)
        serial = tmp_path / "serial"
        parallel = tmp_path / "parallel"
        assert main(["batch", "--config", sweep, "--out", str(serial)]) == 0
        assert main(["batch", "--config", sweep, "--out", str(parallel), "--workers", "2"]) == 0
        assert (serial / "metrics.csv").read_bytes() == (parallel / "metrics.csv").read_bytes()


class TestMetrics:
    def _make_log(self, tmp_path, horizon=40):
        out = tmp_path / "runout"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(small_config_dict(n=10, horizon=horizon, seed=3)))
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        return str(next(out.glob("*.jsonl")))

    def test_single_log_row(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        capsys.readouterr()  # drop the run command's output
        assert main(["metrics", log]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert len(rows) == 1
        assert rows[0]["schema_version"] == "beaconswarm-metrics/1"

    def test_window_override(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        capsys.readouterr()
        assert main(["metrics", log, "--window", "0", "20"]) == 0
        row = next(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert float(row["window_t0_s"]) == 0.0
        assert float(row["window_t1_s"]) == 20.0

    def test_no_trip_log_censored(self, tmp_path, capsys):
        log = self._make_log(tmp_path, horizon=10)  # too short for any trip
        capsys.readouterr()
        assert main(["metrics", log]) == 0
        row = next(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert row["t_conv_s"] == ""
        assert float(row["censored_all"]) == 1.0

    def test_schema_mismatch_exits_2(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        text = open(log).read().replace("beaconswarm-log/1", "beaconswarm-log/9", 1)
        bad = tmp_path / "bad.jsonl"
        bad.write_text(text)
        assert main(["metrics", str(bad)]) == 2
        err = capsys.readouterr().err
        assert "beaconswarm-log/9" in err and "beaconswarm-log/1" in err


class TestRender:
    def _make_log(self, tmp_path):
        out = tmp_path / "runout"
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps(small_config_dict(n=10, horizon=20, seed=1)))
        assert main(["run", "--config", str(cfg), "--out", str(out)]) == 0
        return str(next(out.glob("*.jsonl")))

    def test_frame(self, tmp_path):
        log = self._make_log(tmp_path)
        out = tmp_path / "frames"
        assert main(["render", log, "--at-step", "10", "--out", str(out)]) == 0
        frame = out / "frame_step00010.svg"
        assert frame.exists() and frame.stat().st_size > 0

    def test_step_out_of_range_exits_2(self, tmp_path):
        log = self._make_log(tmp_path)
        assert main(["render", log, "--at-step", "999", "--out", str(tmp_path / "f")]) == 2

    def test_header_only_log_errors(self, tmp_path, capsys):
        log = self._make_log(tmp_path)
        header_only = tmp_path / "empty.jsonl"
        header_only.write_text(open(log).read().split("\n")[0] + "\n")
        assert main(["render", str(header_only), "--at-step", "0",
                     "--out", str(tmp_path / "f")]) == 2
        assert "no records" in capsys.readouterr().err

    def test_plots_from_batch_csv(self, tmp_path):
        sweep = {
            "base": small_config_dict(n=8, horizon=30),
            "sizes": [5, 8],
            "seeds": [0, 1],
            "scenarios": ["empty"],
        }
        spath = tmp_path / "sweep.json"
        spath.write_text(json.dumps(sweep))
        out = tmp_path / "batch"
        assert main(["batch", "--config", str(spath), "--out", str(out)]) == 0
        plots = tmp_path / "plots"
        assert main(["render", str(out / "metrics.csv"), "--plots",
                     "--out", str(plots)]) == 0
        assert (plots / "delay_vs_n.svg").exists()
        assert (plots / "entropy_over_time.svg").exists()


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exit_info:
        main(["--version"])
    assert exit_info.value.code == 0
