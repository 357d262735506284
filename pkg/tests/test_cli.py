import json
import subprocess
import sys

import pytest

from convspec.cli import main

from conftest import SCENARIO_DIR


def write_cfg(tmp_path, cfg, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_version_subprocess():
    out = subprocess.run([sys.executable, "-m", "convspec.cli", "--version"],
                         capture_output=True, text=True)
    assert out.returncode == 0
    assert "convspec" in out.stdout


def test_essential_to_stdout(capsys):
    rc = main(["essential", "--config",
               str(SCENARIO_DIR / "essential_gaussian_well.json")])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["results"]["essential_spectrum"] == [[-0.5, -0.5], [0.0, 1.0]]
    assert rep["results"]["gaps"] == [[-0.5, 0.0]]


def test_out_dir_and_formats(tmp_path, capsys):
    rc = main(["weyl", "--config", str(SCENARIO_DIR / "weyl_vterm.yaml"),
               "--out", str(tmp_path), "--format", "json,csv,plotdata"])
    assert rc == 0
    assert (tmp_path / "weyl-vterm.json").exists()
    assert (tmp_path / "weyl-vterm.csv").read_text().startswith("n,residual")
    assert (tmp_path / "weyl-vterm.plot.csv").exists()


def test_emit_re_exports(tmp_path, capsys):
    rc = main(["essential", "--config",
               str(SCENARIO_DIR / "essential_gaussian_well.json"),
               "--out", str(tmp_path)])
    assert rc == 0
    rc = main(["emit", "--report", str(tmp_path / "essential-gaussian-well.json"),
               "--out", str(tmp_path / "re"), "--format", "csv"])
    assert rc == 0
    assert (tmp_path / "re" / "essential-gaussian-well.csv").exists()


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["essential", "--config", str(tmp_path / "nope.json")]) == 2


def test_malformed_json_exits_2(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["essential", "--config", str(path)]) == 2


def test_unknown_key_exits_2(tmp_path, capsys):
    cfg = json.loads((SCENARIO_DIR / "essential_gaussian_well.json").read_text())
    cfg["surprise"] = 1
    assert main(["essential", "--config", write_cfg(tmp_path, cfg)]) == 2


def test_task_command_mismatch_exits_2(tmp_path, capsys):
    assert main(["weyl", "--config",
                 str(SCENARIO_DIR / "essential_gaussian_well.json")]) == 2


def test_sizing_error_exits_3(tmp_path, capsys):
    cfg = {
        "name": "too-coarse",
        "kernel": {"builtin": "gaussian", "dim": 1},
        "potential": {"builtin": "zero", "dim": 1},
        "grid": {"dim": 1, "half_width": 8.0, "n": 64},
        "task": "weyl",
        "params": {"mode": "symbol_point", "lambda": 0.6065306597126334,
                   "n_list": [8, 64]},
    }
    assert main(["weyl", "--config", write_cfg(tmp_path, cfg)]) == 3


def test_non_convergence_exits_4(tmp_path, capsys):
    cfg = {
        "name": "starved-solver",
        "kernel": {"builtin": "gaussian", "dim": 1},
        "potential": {"builtin": "power_tail", "dim": 1, "params": {"gamma": 1.0}},
        "grid": {"dim": 1, "half_width": 40.0, "n": 512},
        "task": "eigs",
        "params": {"mode": "above", "threshold": 1.0000001, "k": 4,
                   "tol": 1e-14, "max_iter": 4, "classify": False},
        "seed": 11,
    }
    assert main(["eigs", "--config", write_cfg(tmp_path, cfg)]) == 4


def test_failed_certificate_with_expect_pass_exits_5(tmp_path, capsys):
    cfg = json.loads((SCENARIO_DIR / "certify_dual.json").read_text())
    cfg["params"]["r0"] = 1.0  # radii far too small for positivity
    path = write_cfg(tmp_path, cfg)
    assert main(["certify", "--config", path, "--expect-pass"]) == 5
    # without --expect-pass the run reports the failure but exits 0
    assert main(["certify", "--config", path]) == 0


def test_seed_override_changes_scenario_echo(tmp_path, capsys):
    rc = main(["eigs", "--config", str(SCENARIO_DIR / "eigs_window.json"),
               "--seed", "99"])
    assert rc == 0
    rep = json.loads(capsys.readouterr().out)
    assert rep["scenario"]["seed"] == 99
