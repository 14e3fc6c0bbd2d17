import json
import logging
import os
import subprocess
import sys

import pandas as pd
import pytest

from src.eval.config import ExperimentConfig, build_config, load_experiment, parse_record
from src.eval.reports import run_tasks
from src.eval.run_eval import main
from src.utils.errors import ConfigError
from src.utils.logging_setup import configure_logging

FAST = ["--kmax", "16"]


def run_json(tmp_path, argv, name="report.json"):
    out = tmp_path / name
    code = main(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


@pytest.mark.parametrize("dim,expected", [(3, 1), (4, 0)])
def test_gap_exit_codes(tmp_path, dim, expected):
    code, report = run_json(tmp_path, ["gap", "--dim", str(dim), "--degree", "2", "--kmax", "32"])
    assert code == expected
    assert report["report"] == "gap"
    assert report["contraction_pass"] is (expected == 0)
    assert report["equivalence_agrees"]


def test_gap_with_body_generator(tmp_path):
    generator = '{"kind": "ellipsoid", "a": 2.0, "b": 1.0}'
    code, report = run_json(tmp_path, ["gap", "--generator", generator, "--kmax", "32"])
    assert code == 0
    assert report["c2plus"] and report["body_pass"]


def test_multipliers_of_ball_generator(tmp_path):
    code, report = run_json(tmp_path, ["multipliers", "--generator", "ball"] + FAST)
    assert code == 0
    rows = report["rows"]
    assert rows[0]["a_k"] > 0
    assert all(abs(row["a_k"]) < 1e-12 for row in rows[1:])
    assert report["decay"] is None
    assert report["derivative_check"]["relative_error"] < 1e-6


def test_multipliers_csv(tmp_path):
    out = tmp_path / "mult.csv"
    assert main(["multipliers", "--format", "csv", "--out", str(out)] + FAST) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["k", "a_k", "ratio", "box", "linearization"]
    assert frame.loc[2, "linearization"] == pytest.approx(-2.0 / 3.0, rel=1e-9)


def test_iterate_from_ball(tmp_path):
    code, report = run_json(tmp_path, ["iterate", "--body", "ball", "--steps", "3", "--mmax", "2"] + FAST)
    assert code == 0
    assert report["steps_completed"] == 3
    assert max(step["sup_distance"] for step in report["steps"]) < 1e-12
    assert [row["m"] for row in report["fm"]] == [1, 2]


def test_iterate_truncation_exit_code(tmp_path):
    generator = '{"kind": "spectrum", "coeffs": [1.0, 0.0, 20.0]}'
    body = '{"kind": "perturbed_ball", "k": 2, "lambda": 0.3}'
    code, report = run_json(tmp_path, ["iterate", "--generator", generator, "--body", body, "--mode", "phi"])
    assert code == 1
    assert report["truncated"]
    assert report["fm"] == []


def test_invalid_start_is_numeric_failure(tmp_path):
    body = '{"kind": "perturbed_ball", "k": 2, "lambda": 0.9, "check": false}'
    assert main(["iterate", "--body", body, "--steps", "2", "--out", str(tmp_path / "x.json")] + FAST) == 3


def test_amplitude_sweep_command(tmp_path):
    argv = ["iterate", "--amplitudes", "0.02,0.9", "--steps", "10"] + FAST
    code, report = run_json(tmp_path, argv)
    assert code == 0
    assert report["report"] == "amplitude_sweep"
    assert [row["valid_start"] for row in report["rows"]] == [True, False]


def test_petty_csv_and_determinism(tmp_path):
    argv = ["petty", "--samples", "3", "--seed", "5", "--kmax", "32", "--format", "csv"]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(argv + ["--out", str(first)]) == 0
    assert main(argv + ["--out", str(second)]) == 0
    assert first.read_bytes() == second.read_bytes()
    frame = pd.read_csv(first)
    assert len(frame) == 5
    assert list(frame["kind"][:2]) == ["ball", "ellipsoid"]
    assert frame["residual"].min() >= -1e-10


def test_petty_summary(tmp_path):
    code, report = run_json(tmp_path, ["petty", "--degree", "1", "--samples", "2", "--seed", "1", "--kmax", "32"])
    assert code == 0
    summary = report["summary"]
    assert summary["passed"]
    assert summary["psi_first_ge_ball"]
    assert summary["min_sharp_residual"] >= -1e-9


def test_intervals_to_stdout(capsys):
    assert main(["intervals", "--dim", "4", "--k", "2"]) == 0
    report = json.loads(capsys.readouterr().out)
    row = report["rows"][0]
    assert row["exact"] and row["contained"]
    assert row["I_upper"] == pytest.approx(0.6)


@pytest.mark.parametrize(
    "argv",
    [
        ["gap", "--dim", "2"],
        ["gap", "--degree", "4"],
        ["gap", "--generator", "{not json"],
        ["gap", "--generator", '{"kind": "spectrum", "coeffs": ["x", 1]}'],
        ["iterate", "--amplitudes", "0.1,x"],
        ["multipliers", "--experiment", "no_such_experiment"],
    ],
)
def test_config_errors_exit_two(argv):
    assert main(argv) == 2


def test_argparse_rejects_unknown_format():
    with pytest.raises(SystemExit) as info:
        main(["gap", "--format", "xml"])
    assert info.value.code == 2


def test_named_experiment(tmp_path, repo_root, monkeypatch):
    monkeypatch.chdir(repo_root)
    code, report = run_json(tmp_path, ["gap", "--experiment", "segment_n3_gap", "--kmax", "16"])
    assert code == 1
    assert report["config"]["dim"] == 3
    assert report["config"]["kmax"] == 16
    assert main(["iterate", "--experiment", "segment_n3_gap"]) == 2


def test_experiments_file_entries_are_valid(repo_root):
    path = repo_root / "data" / "experiments.json"
    experiments = json.loads(path.read_text())["experiments"]
    for name, entry in experiments.items():
        config = build_config(entry["command"], {}, experiment=name, experiments_path=str(path))
        assert config.command == entry["command"]


def test_layering(tmp_path, monkeypatch):
    monkeypatch.setenv("MINKVAL_KMAX", "24")
    monkeypatch.setenv("MINKVAL_OUTPUT_DIR", str(tmp_path))
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"dim": 5, "steps": 7}))
    config = build_config("iterate", {"dim": 3, "out": "run.json", "kmax": None}, str(config_file))
    assert (config.dim, config.steps, config.kmax) == (3, 7, 24)
    assert config.output_path == str(tmp_path / "run.json")
    assert "out" not in config.to_dict()


def test_bad_environment_and_unknown_keys(tmp_path, monkeypatch):
    monkeypatch.setenv("MINKVAL_KMAX", "many")
    with pytest.raises(ConfigError):
        build_config("gap", {})
    monkeypatch.delenv("MINKVAL_KMAX")
    config_file = tmp_path / "config.json"
    config_file.write_text(json.dumps({"dimension": 5}))
    with pytest.raises(ConfigError):
        build_config("gap", {}, str(config_file))


def test_records_and_experiment_lookup(tmp_path):
    assert parse_record("segment", "generator") == {"kind": "segment"}
    with pytest.raises(ConfigError):
        parse_record('{"a": 1}', "body")
    path = tmp_path / "experiments.json"
    path.write_text(json.dumps({"experiments": {"x": {"command": "gap", "dim": 5}}}))
    assert load_experiment("x", "gap", str(path)) == {"dim": 5}
    assert ExperimentConfig(command="gap").output_path is None


def test_run_tasks_keeps_order():
    tasks = [-3, 1, -2, 5]
    assert run_tasks(abs, tasks, workers=2) == [3, 1, 2, 5]
    assert run_tasks(abs, tasks) == [3, 1, 2, 5]


def test_log_level_from_environment(monkeypatch):
    monkeypatch.setenv("MINKVAL_LOG_LEVEL", "debug")
    configure_logging()
    assert logging.getLogger().level == logging.DEBUG
    configure_logging("error")
    assert logging.getLogger().level == logging.ERROR
    monkeypatch.setenv("MINKVAL_LOG_LEVEL", "chatty")
    configure_logging()
    assert logging.getLogger().level == logging.WARNING
    configure_logging("warning")


def test_runner_reports_worst_exit_code(tmp_path, repo_root, monkeypatch):
    experiments = {
        "passes": {"command": "gap", "dim": 4, "degree": 2, "kmax": 16},
        "fails": {"command": "gap", "dim": 3, "degree": 2, "kmax": 16},
    }
    (tmp_path / "data").mkdir()
    (tmp_path / "data" / "experiments.json").write_text(json.dumps({"experiments": experiments}))
    bin_dir = tmp_path / "bin"
    bin_dir.mkdir()
    (bin_dir / "python").symlink_to(sys.executable)
    monkeypatch.setenv("PATH", f"{bin_dir}{os.pathsep}{os.environ['PATH']}")
    monkeypatch.setenv("PYTHONPATH", str(repo_root))
    result = subprocess.run(
        ["bash", str(repo_root / "run_experiment.sh"), "all"], cwd=tmp_path, capture_output=True, text=True
    )
    assert result.returncode == 1
    assert "passes: exit 0" in result.stdout
    assert "fails: exit 1" in result.stdout
    assert (tmp_path / "outputs" / "passes.json").exists()
