import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from peakopt.cli import load_config, main


def write_config(tmp_path, text):
    path = tmp_path / "run.yaml"
    path.write_text(text)
    return str(path)


FAST_LINEAR = """
model: linear
horizon: 2.0
solver:
  n_steps: 200
  tau0: 0.9
output:
  directory: "{out}"
seed: 3
"""


class TestConfigLoading:
    def test_round_trip(self, tmp_path):
        cfg = load_config(write_config(tmp_path, FAST_LINEAR.format(out=tmp_path / "o")))
        assert cfg["model"] == "linear"
        assert cfg["solver"]["n_steps"] == 200
        assert cfg["seed"] == 3

    def test_unknown_top_level_key(self, tmp_path):
        from peakopt.errors import ConfigError

        bad = FAST_LINEAR.format(out=tmp_path) + "\nextra_key: 1\n"
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, bad))

    def test_unknown_solver_key(self, tmp_path):
        from peakopt.errors import ConfigError

        bad = FAST_LINEAR.format(out=tmp_path).replace("tau0: 0.9", "tau0: 0.9\n  stepsize: 2")
        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, bad))

    def test_missing_model(self, tmp_path):
        from peakopt.errors import ConfigError

        with pytest.raises(ConfigError):
            load_config(write_config(tmp_path, "horizon: 2.0\n"))


class TestSolveCommand:
    def test_writes_all_outputs(self, tmp_path):
        out = tmp_path / "run"
        cfg = write_config(tmp_path, FAST_LINEAR.format(out=out))
        rc = main(["solve", "--config", cfg])
        assert rc == 0
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["converged"] is True
        assert summary["model"] == "linear"
        assert (out / "trajectory.csv").exists()
        assert (out / "history.csv").exists()

    def test_trajectory_schema(self, tmp_path):
        out = tmp_path / "run"
        cfg = write_config(tmp_path, FAST_LINEAR.format(out=out))
        main(["solve", "--config", cfg])
        lines = (out / "trajectory.csv").read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header == ["s", "t", "y_1", "u_1", "p_1", "side"]
        assert len(lines) - 1 == 202  # N + 2 rows: interface emitted twice
        summary = json.loads((out / "run_summary.json").read_text())
        tau_star = summary["tau_star"]
        rows = [line.split(",") for line in lines[1:]]
        t = np.array([float(r[1]) for r in rows])
        sides = [r[-1] for r in rows]
        mid = 100
        # interface pair: same physical time tau*, flagged left/right
        assert sides[mid] == "left" and sides[mid + 1] == "right"
        assert t[mid] == tau_star and t[mid + 1] == tau_star
        # strictly increasing otherwise
        mask = np.ones(len(t), dtype=bool)
        mask[mid + 1] = False
        assert np.all(np.diff(t[mask]) > 0)
        assert t[0] == 0.0 and t[-1] == 2.0

    def test_bit_reproducible(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cfg1 = write_config(tmp_path, FAST_LINEAR.format(out=out1))
        main(["solve", "--config", cfg1])
        cfg2 = (tmp_path / "run2.yaml")
        cfg2.write_text(FAST_LINEAR.format(out=out2))
        main(["solve", "--config", str(cfg2)])
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
        assert (out1 / "history.csv").read_bytes() == (out2 / "history.csv").read_bytes()

    def test_zero_iterations_fails_with_initial_history(self, tmp_path):
        out = tmp_path / "run"
        text = FAST_LINEAR.format(out=out).replace(
            "  tau0: 0.9", "  tau0: 0.9\n  max_bb_iters: 0\n  max_newton_iters: 0"
        )
        cfg = write_config(tmp_path, text)
        rc = main(["solve", "--config", cfg])
        assert rc == 1
        history = (out / "history.csv").read_text().strip().split("\n")
        assert len(history) == 2  # header + the initial gradient entry
        summary = json.loads((out / "run_summary.json").read_text())
        assert summary["converged"] is False

    def test_cli_flag_overrides(self, tmp_path):
        out = tmp_path / "run"
        cfg = write_config(tmp_path, FAST_LINEAR.format(out=out))
        rc = main(["solve", "--config", cfg, "--n-steps", "100", "--out", str(tmp_path / "o2")])
        assert rc == 0
        summary = json.loads((tmp_path / "o2" / "run_summary.json").read_text())
        assert summary["config"]["solver"]["n_steps"] == 100

    def test_model_flag_without_config(self, tmp_path):
        rc = main(["solve", "--model", "linear", "--n-steps", "100",
                   "--out", str(tmp_path / "m")])
        assert rc == 0

    def test_17_digit_round_trip(self, tmp_path):
        out = tmp_path / "run"
        cfg = write_config(tmp_path, FAST_LINEAR.format(out=out))
        main(["solve", "--config", cfg])
        lines = (out / "trajectory.csv").read_text().strip().split("\n")
        row = lines[5].split(",")
        for cell in row[:-1]:
            assert float(cell) == float(format(float(cell), ".17g"))


class TestBurgersOutputs:
    def test_snapshot_files_written(self, tmp_path):
        out = tmp_path / "bg"
        text = f"""
model: burgers
horizon: 10.0
solver:
  n_steps: 20
  tau0: 5.0
  max_bb_iters: 2
  max_newton_iters: 1
  gmres_max_iters: 10
output:
  directory: "{out}"
seed: 0
"""
        cfg = write_config(tmp_path, text)
        main(["solve", "--config", cfg])  # tiny run; convergence not expected
        snaps = sorted((out / "snapshots").glob("snapshot_*.csv"))
        assert len(snaps) == 8
        first = snaps[0].read_text().split("\n")
        assert first[0].startswith("#")
        assert first[1] == "x,y,u"
        assert len(first) >= 101


class TestVerifyCommand:
    def test_linear_model_all_pass(self, tmp_path):
        out = tmp_path / "verify"
        text = FAST_LINEAR.format(out=out).replace("n_steps: 200", "n_steps: 400")
        cfg = write_config(tmp_path, text)
        rc = main(["verify", "--config", cfg])
        assert rc == 0
        checks = json.loads((out / "checks.json").read_text())
        assert all(c["passed"] for c in checks)
        ids = {c["check_id"] for c in checks}
        assert {"fd_gradient", "fd_hvp", "hvp_symmetry", "duality_order"} <= ids

    def test_corrupted_adjoint_fails_duality(self, linear_problem):
        from peakopt.timegrid import TauParameter
        from peakopt.verification import duality_check

        tp = TauParameter(0.8, 2.0)
        good = duality_check(linear_problem, tp, n_list=(100, 200))
        bad = duality_check(linear_problem, tp, n_list=(100, 200), _flip_adjoint_sign=True)
        assert good.passed
        assert not bad.passed


class TestSweepCommand:
    def test_sweep_writes_isolated_directories(self, tmp_path):
        out = tmp_path / "sweep"
        cfg = write_config(tmp_path, FAST_LINEAR.format(out=out))
        rc = main(["sweep", "--config", cfg, "--values", "0.6,1.2", "--jobs", "1"])
        assert rc == 0
        for v in ("0.6", "1.2"):
            assert (out / f"tau0_{v}" / "run_summary.json").exists()


class TestEntryPoint:
    def test_console_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "peakopt.cli", "--version"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "peakopt" in proc.stdout
