import json
import os

import numpy as np
import pytest

from gyrocal.cli import main
from gyrocal.estimator import calibrate
from gyrocal.session_io import SessionLog, write_session_log
from gyrocal.simulator import SimulationConfig, sample_ground_truth, simulate_session


@pytest.fixture
def session_log_path(tmp_path):
    config = SimulationConfig(noise_sigma=0.15, rng_seed=13)
    rng = np.random.default_rng(13)
    truth = sample_ground_truth(config, rng)
    sim = simulate_session(truth, config, rng)
    path = tmp_path / "session.csv"
    write_session_log(path, SessionLog.from_arrays(
        sim.static_raw, list(sim.rotation_raw), config.sample_rate,
        full_scale=245.0, device="bench"))
    return path, sim, truth


def write_params(path, values):
    with open(path, "w") as handle:
        json.dump(values, handle)
    return path


class TestSimulate:
    def test_writes_artifacts_and_repeats_bitwise(self, tmp_path, capsys):
        config = tmp_path / "campaign.yaml"
        config.write_text(
            "noise_levels: [0.03]\n"
            "misalignment_range: [0.0, 0.0]\n"
            "n_param_sets: 2\n"
            "n_sims_per_set: 2\n"
            "n_test_rates: 20\n"
        )
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        assert main(["simulate", "--config", str(config), "--seed", "5",
                     "--out", str(out_a)]) == 0
        assert main(["simulate", "--config", str(config), "--seed", "5",
                     "--out", str(out_b)]) == 0
        for name in ("summary.json", "replicates_sigma_0.03.csv"):
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()
        summary = json.loads((out_a / "summary.json").read_text())
        assert summary["rng_seed"] == 5
        assert "0.03" in summary["campaigns"]

    def test_zero_noise_config_all_errors_tiny(self, tmp_path):
        config = tmp_path / "quiet.yaml"
        config.write_text(
            "noise_sigma: 0.0\n"
            "misalignment_range: [0.0, 0.0]\n"
            "n_param_sets: 2\n"
            "n_sims_per_set: 2\n"
            "n_test_rates: 20\n"
        )
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(config), "--out", str(out)]) == 0
        summary = json.loads((out / "summary.json").read_text())
        stats = summary["campaigns"]["0.0"]["parameter_errors"]
        for name in ("k_x", "k_y", "k_z", "b_x", "b_y", "b_z"):
            assert abs(stats[name]["min"]) < 1e-9
            assert abs(stats[name]["max"]) < 1e-9

    def test_bad_config_reports_and_fails(self, tmp_path, capsys):
        config = tmp_path / "broken.yaml"
        config.write_text("noise_sgima: 0.03\n")
        assert main(["simulate", "--config", str(config), "--out", str(tmp_path)]) == 1
        assert "noise_sgima" in capsys.readouterr().err


class TestCalibrate:
    def test_json_output_matches_library(self, session_log_path, capsys):
        path, sim, truth = session_log_path
        assert main(["calibrate", str(path)]) == 0
        payload = json.loads(capsys.readouterr().out)
        expected = calibrate(sim.session, noise_sigma=0.15)
        for key, value in expected.as_dict().items():
            assert payload[key] == value  # bitwise, repr round trip
        assert payload["units"]["bias"] == "deg/s"
        diag = payload["diagnostics"]
        assert diag["device"] == "bench"
        assert diag["saturated_samples"] >= 0
        assert len(diag["rotations"]) == 3
        assert diag["condition_number"] > 0.0

    def test_out_flag_writes_file(self, session_log_path, tmp_path, capsys):
        path, _, _ = session_log_path
        out = tmp_path / "params.json"
        assert main(["calibrate", str(path), "--out", str(out)]) == 0
        stdout_payload = json.loads(capsys.readouterr().out)
        file_payload = json.loads(out.read_text())
        assert stdout_payload == file_payload

    def test_motion_during_static_stage_fails(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        static = rng.normal(0.0, 5.0, size=(300, 3))  # clearly not still
        turns = [np.zeros((500, 3)) for _ in range(3)]
        for axis, block in enumerate(turns):
            block[:, axis] = 72.0
        path = tmp_path / "moved.csv"
        write_session_log(path, SessionLog.from_arrays(static, turns, 100.0))
        assert main(["calibrate", str(path), "--noise-sigma", "0.15"]) == 1
        assert "static" in capsys.readouterr().err

    def test_missing_file_fails_cleanly(self, tmp_path, capsys):
        assert main(["calibrate", str(tmp_path / "nope.csv")]) == 1
        assert "error" in capsys.readouterr().err


class TestCompare:
    def test_difference_column_and_threshold_marks(self, tmp_path, capsys):
        a = write_params(tmp_path / "a.json", {
            "k_x": 1.0, "k_y": 1.0, "k_z": 1.0,
            "b_x": 0.0, "b_y": 0.0, "b_z": 0.0,
        })
        b = write_params(tmp_path / "b.json", {
            "k_x": 1.05, "k_y": 1.0, "k_z": 1.0,
            "b_x": 0.0, "b_y": -0.002, "b_z": 0.0,
        })
        assert main(["compare", str(a), str(b), "--threshold", "0.03"]) == 0
        out = capsys.readouterr().out
        lines = {line.split()[0]: line for line in out.splitlines()[1:] if line}
        assert "0.0500" in lines["k_x"] and "*" in lines["k_x"]
        assert "-0.0020" in lines["b_y"] and "*" not in lines["b_y"]
        assert "1 difference(s) above threshold" in out

    def test_identical_inputs_all_zero(self, tmp_path, capsys):
        values = {"k_x": 1.1, "k_y": 0.9, "k_z": 1.0,
                  "b_x": 0.5, "b_y": -0.5, "b_z": 2.0}
        a = write_params(tmp_path / "a.json", values)
        b = write_params(tmp_path / "b.json", values)
        assert main(["compare", str(a), str(b)]) == 0
        out = capsys.readouterr().out
        assert "all differences within threshold" in out
        for line in out.splitlines()[1:7]:
            assert "0.0000" in line

    def test_missing_field_reported(self, tmp_path, capsys):
        a = write_params(tmp_path / "a.json", {"k_x": 1.0})
        b = write_params(tmp_path / "b.json", {
            "k_x": 1.0, "k_y": 1.0, "k_z": 1.0,
            "b_x": 0.0, "b_y": 0.0, "b_z": 0.0,
        })
        assert main(["compare", str(a), str(b)]) == 1
        err = capsys.readouterr().err
        assert "k_y" in err


class TestVerify:
    def test_doe_suite_passes(self, capsys):
        assert main(["verify", "--suite", "doe"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") >= 4

    def test_observability_suite_passes(self, capsys):
        assert main(["verify", "--suite", "observability"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out
        assert out.count("PASS") >= 3

    def test_unknown_suite_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["verify", "--suite", "allan"])
        assert info.value.code == 2
