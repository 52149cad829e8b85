"""Command-line interface: artifact generation, exit codes, and output
directory resolution."""

from __future__ import annotations

import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from comoto.baselines import ExecutionTrace, save_trace
from comoto.cli import main
from comoto.kinematics import load_trajectory, save_trajectory
from comoto.optimizer import straightline_joint_init
from comoto.scenarios import load_scenario

TINY_OVERRIDES = {
    "benchmark": {"families": ["stationary"], "seeds": [1]},
    "optimizer": {"max_iters": 120},
}


@pytest.fixture()
def tiny_config_path(tmp_path):
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(TINY_OVERRIDES))
    return path


@pytest.fixture()
def scenario_path(tmp_path):
    out = tmp_path / "scenarios"
    assert main(["gen", "--family", "stationary", "--seeds", "1", "--out", str(out)]) == 0
    return out / "stationary_1.yaml"


def test_gen_writes_scenarios(tmp_path, capsys):
    out = tmp_path / "scen"
    code = main(["gen", "--family", "reaching_far", "--seeds", "1", "2", "--out", str(out)])
    assert code == 0
    printed = capsys.readouterr().out.strip().splitlines()
    assert len(printed) == 2
    for seed in (1, 2):
        assert (out / f"reaching_far_{seed}.yaml").exists()
    sc = load_scenario(out / "reaching_far_1.yaml")
    assert sc.family == "reaching_far"


def test_out_dir_env_fallback(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("COMOTO_OUT_DIR", str(tmp_path / "from_env"))
    assert main(["gen", "--family", "stationary", "--seeds", "3"]) == 0
    capsys.readouterr()
    assert (tmp_path / "from_env" / "stationary_3.yaml").exists()


def test_run_tiny_benchmark(tmp_path, tiny_config_path, capsys):
    out = tmp_path / "bench"
    code = main(
        ["run", "--config", str(tiny_config_path), "--out", str(out), "--format", "csv"]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    assert "5 rows (0 failed)" in stdout
    assert (out / "results.csv").exists()
    assert (out / "runs.csv").exists()
    assert not (out / "table.md").exists()  # markdown not requested


def test_run_family_and_seed_flags(tmp_path, tiny_config_path, capsys):
    out = tmp_path / "bench"
    code = main(
        [
            "run", "--config", str(tiny_config_path), "--family", "stationary",
            "--seeds", "2", "--out", str(out), "--format", "csv",
        ]
    )
    assert code == 0
    lines = (out / "results.csv").read_text().splitlines()
    assert len(lines) == 6  # header plus one row per method
    assert all(",2," in ln for ln in lines[1:])


def test_eval_trajectory(tmp_path, scenario_path, capsys):
    sc = load_scenario(scenario_path)
    traj = straightline_joint_init(sc.robot_start, sc.robot_goal, sc.n_waypoints, sc.dt, sc.robot_t0)
    traj_path = tmp_path / "traj.csv"
    save_trajectory(traj, traj_path)
    code = main(["eval", "--scenario", str(scenario_path), "--trajectory", str(traj_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert set(report) == {"dst_pct", "vis_pct", "legibility", "nom_dev", "completed"}
    assert report["completed"] is True
    assert 0.0 <= report["dst_pct"] <= 100.0


def test_eval_trace(tmp_path, scenario_path, capsys):
    sc = load_scenario(scenario_path)
    traj = straightline_joint_init(sc.robot_start, sc.robot_goal, sc.n_waypoints, sc.dt, sc.robot_t0)
    trace = ExecutionTrace(timestamps=traj.times, configs=traj.waypoints, completed=False)
    trace_path = tmp_path / "trace.csv"
    save_trace(trace, trace_path)
    code = main(["eval", "--scenario", str(scenario_path), "--trace", str(trace_path)])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["completed"] is False


def test_eval_requires_exactly_one_input(scenario_path, tmp_path, capsys):
    assert main(["eval", "--scenario", str(scenario_path)]) == 1
    traj_path = tmp_path / "t.csv"
    save_trajectory(straightline_joint_init(np.zeros(7), np.zeros(7), 3, 0.1), traj_path)
    code = main(
        ["eval", "--scenario", str(scenario_path), "--trajectory", str(traj_path),
         "--trace", str(traj_path)]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_solve_writes_trajectory(tmp_path, tiny_config_path, scenario_path, capsys):
    out = tmp_path / "solve"
    code = main(
        ["solve", "--scenario", str(scenario_path), "--config", str(tiny_config_path),
         "--out", str(out)]
    )
    assert code == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["scenario"] == "stationary/1"
    assert summary["final_cost"] <= summary["initial_cost"]
    traj = load_trajectory(summary["trajectory"])
    sc = load_scenario(scenario_path)
    assert np.array_equal(traj.waypoints[0], sc.robot_start)
    assert np.array_equal(traj.waypoints[-1], sc.robot_goal)


def test_missing_files_exit_one(tmp_path, capsys):
    assert main(["eval", "--scenario", str(tmp_path / "nope.yaml"), "--trajectory", "x.csv"]) == 1
    assert main(["run", "--config", str(tmp_path / "nope.yaml")]) == 1
    capsys.readouterr()


def test_malformed_scenario_exits_two(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("family: stationary\n")
    traj_path = tmp_path / "t.csv"
    save_trajectory(straightline_joint_init(np.zeros(7), np.zeros(7), 3, 0.1), traj_path)
    code = main(["eval", "--scenario", str(bad), "--trajectory", str(traj_path)])
    assert code == 2
    assert "runtime error" in capsys.readouterr().err


def test_usage_errors_exit_one(capsys):
    assert main([]) == 1
    assert main(["gen", "--family", "unknown"]) == 1
    assert main(["run", "--format", "xml"]) == 1
    capsys.readouterr()


def test_module_entry_point(tmp_path):
    out = tmp_path / "scen"
    proc = subprocess.run(
        [sys.executable, "-m", "comoto.cli", "gen", "--family", "stationary",
         "--seeds", "1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert (out / "stationary_1.yaml").exists()
