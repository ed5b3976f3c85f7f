import re

import pytest

from cli import ERROR_PREFIX, main
from config import load_scenario, write_scenario
from utils.export import read_history, read_steps


def test_hardening_reports_the_model2_threshold(capsys):
    assert main(["hardening", "--model", "2"]) == 0
    out = capsys.readouterr().out
    match = re.search(r"stress softening threshold: alpha >= ([0-9.eE+-]+)", out)
    assert match is not None
    assert 0.25 <= float(match.group(1)) <= 0.25 + 2e-3


def test_hardening_model1_has_no_softening_threshold(capsys):
    assert main(["hardening", "--model", "1"]) == 0
    out = capsys.readouterr().out
    assert "Model1" in out
    assert "threshold" not in out


def test_unknown_flag_is_a_usage_error(capsys):
    assert main(["run", "--config", "trivial", "--frobnicate"]) == 2


def test_missing_command_is_a_usage_error(capsys):
    assert main([]) == 2


def test_run_trivial_scenario(tmp_path, capsys):
    assert main(["run", "--config", "trivial", "--output", str(tmp_path)]) == 0
    assert sorted(p.name for p in tmp_path.iterdir()) == ["history.csv", "state_0000.vtk", "steps.csv"]
    rows = read_history(tmp_path / "history.csv")
    assert [(r["step"], r["outer_iteration"], r["error"]) for r in rows] == [(0, 1, 0.0)]
    steps = read_steps(tmp_path / "steps.csv")
    assert [(s["step"], s["converged"], s["damage_failures"]) for s in steps] == [(0, True, 0)]
    out = capsys.readouterr().out
    assert "Done" in out
    assert "0 damage failure(s)" in out


def test_run_scenario_file_with_algorithm_override(tmp_path, capsys):
    config = tmp_path / "trivial.cfg"
    write_scenario(load_scenario("trivial"), config)
    out_dir = tmp_path / "out"
    assert main(["run", "--config", str(config), "--algorithm", "fast", "--cl", "0.5", "--output", str(out_dir)]) == 0
    assert (out_dir / "history.csv").is_file()
    assert "fast algorithm (c_l=0.5" in capsys.readouterr().out


def test_run_missing_config(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "missing.cfg")]) == 1
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1
    assert err[0].startswith(ERROR_PREFIX)


def test_run_rejects_invalid_relaxation_constant(tmp_path, capsys):
    assert main(["run", "--config", "trivial", "--cl", "1.5", "--output", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith(ERROR_PREFIX)


def test_gradcheck_passes(capsys):
    assert main(["gradcheck", "--instances", "3"]) == 0
    out = capsys.readouterr().out
    assert "gradient max relative error" in out
    assert "hessian max relative error" in out


def test_compare_trivial(capsys):
    assert main(["compare", "--config", "trivial"]) == 0
    out = capsys.readouterr().out
    assert re.search(r"^alternate: outer iterations 1,", out, re.MULTILINE)
    assert re.search(r"^fast: outer iterations 1,", out, re.MULTILINE)
    assert "speedup" in out


def test_sweep_writes_one_curve_per_value(tmp_path, capsys):
    assert main(["sweep", "--config", "trivial", "--w11", "0.5,2", "--output", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "w11=0.5: max alpha 0.0000" in out
    assert "w11=2: max alpha 0.0000" in out
    lines = (tmp_path / "sweep.csv").read_text(encoding="ascii").splitlines()
    assert lines == ["step,w11=0.5,w11=2.0", "0,0.0,0.0"]


def test_sweep_rejects_a_malformed_list(capsys):
    assert main(["sweep", "--config", "trivial", "--w11", "1e3,abc"]) == 2


def test_sweep_rejects_a_non_positive_value(tmp_path, capsys):
    assert main(["sweep", "--config", "trivial", "--w11", "0", "--output", str(tmp_path)]) == 1
    assert capsys.readouterr().err.startswith(ERROR_PREFIX)
