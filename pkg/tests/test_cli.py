import json
import math
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from fracphi.cli import main


@pytest.fixture()
def runner():
    return CliRunner()


def write_config(tmp_path, name="cfg.yaml", **overrides):
    base = {
        "schema": 1,
        "problem": {
            "phi": "t",
            "betas": [[0.75, 0.0], [0.25, 0.0]],
            "coeffs": ["t"],
            "rhs": "t",
            "init": [0.0],
            "T": 1.0,
        },
        "numerics": {"N": 129, "tol": 1e-10, "kmax": 200, "ml_tol": 1e-13},
    }
    for key, value in overrides.items():
        base[key] = value
    text = json.dumps(base)  # JSON is a YAML subset
    path = tmp_path / name
    path.write_text(text)
    return path


def test_seed_docs(runner, tmp_path):
    result = runner.invoke(main, ["--seed-docs", "--out", str(tmp_path)])
    assert result.exit_code == 0
    assert (tmp_path / "demo1.yaml").exists()
    assert (tmp_path / "demo2.yaml").exists()


def test_solve_writes_csv_and_summary(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "sol.csv"
    result = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(out)])
    assert result.exit_code == 0, result.output
    lines = out.read_text().splitlines()
    assert lines[0] == "t,re_x,im_x,re_residual,im_residual"
    assert len(lines) == 130
    first = lines[1].split(",")
    assert first[0] == "0" and first[1] == "0"
    summary = json.loads((tmp_path / "sol.json").read_text())
    assert summary["status"] == "ok"
    assert summary["certificate"]["satisfied"] is True
    assert summary["residual_norm"] < 1e-2
    assert summary["terms_used"] > 0


def test_solve_deterministic_output(runner, tmp_path):
    cfg = write_config(tmp_path)
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(out1)]).exit_code == 0
    assert runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(out2)]).exit_code == 0
    assert out1.read_bytes() == out2.read_bytes()


def test_solve_method_picard_matches_series(runner, tmp_path):
    cfg = write_config(tmp_path)
    outs = {}
    for method in ("series", "picard"):
        out = tmp_path / f"{method}.csv"
        result = runner.invoke(
            main, ["solve", "--config", str(cfg), "--out", str(out), "--method", method]
        )
        assert result.exit_code == 0, result.output
        rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
        outs[method] = np.array([float(r[1]) for r in rows])
    assert np.max(np.abs(outs["series"] - outs["picard"])) <= 1e-9


def test_solve_validation_failure_exit_1(runner, tmp_path):
    cfg = write_config(tmp_path)
    bad = json.loads(cfg.read_text())
    bad["problem"]["betas"] = [[0.5, 0.0], [0.8, 0.0]]
    cfg.write_text(json.dumps(bad))
    result = runner.invoke(main, ["solve", "--config", str(cfg), "--out", str(tmp_path / "x.csv")])
    assert result.exit_code == 1
    assert "not strictly decreasing" in result.output


def test_solve_bad_schema_exit_1(runner, tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("schema: 2\nproblem: {}\n")
    result = runner.invoke(main, ["solve", "--config", str(path)])
    assert result.exit_code == 1
    assert "schema" in result.output


def test_ml_exact_strings(runner):
    result = runner.invoke(main, ["ml", "--a", "1", "--b", "1", "--z", "0"])
    assert result.exit_code == 0
    assert result.output.strip() == "1 0"
    result = runner.invoke(main, ["ml", "--a", "1", "--b", "1", "--z", "1"])
    assert result.exit_code == 0
    re_part, im_part = result.output.split()
    assert float(re_part) == pytest.approx(math.e, rel=1e-12)
    assert float(im_part) == 0.0


def test_ml_kilbas_saigo_geometric(runner):
    result = runner.invoke(
        main,
        ["ml", "--ks", "--alpha", "1", "--beta", "1", "--gamma", "0", "--lambda", "0", "--z", "0.5"],
    )
    assert result.exit_code == 0
    value = float(result.output.split()[0])
    assert value == pytest.approx(2.0, rel=1e-12)


def test_ml_divergence_exit_2_prints_partial(runner):
    result = runner.invoke(main, ["ml", "--a", "0.5", "--b", "1", "--z", "40"])
    assert result.exit_code == 2
    assert "numerical failure" in result.output
    # the partial sum is still printed as `re im`
    assert len(result.output.strip().splitlines()[-1].split()) == 2


def test_fracint_of_one_is_t(runner, tmp_path):
    out = tmp_path / "int.csv"
    result = runner.invoke(
        main, ["fracint", "--f", "1", "--alpha", "1", "--phi", "t", "--n", "65", "--out", str(out)]
    )
    assert result.exit_code == 0
    rows = [line.split(",") for line in out.read_text().splitlines()[1:]]
    t = np.array([float(r[0]) for r in rows])
    v = np.array([float(r[1]) for r in rows])
    assert np.max(np.abs(v - t)) < 1e-12


def test_fracint_power_rule_endpoint(runner, tmp_path):
    out = tmp_path / "int.csv"
    result = runner.invoke(
        main,
        ["fracint", "--f", "t^1", "--alpha", "0.5", "--phi", "t", "--n", "129", "--out", str(out)],
    )
    assert result.exit_code == 0
    last = out.read_text().splitlines()[-1].split(",")
    assert float(last[0]) == 1.0
    assert float(last[1]) == pytest.approx(math.gamma(2.0) / math.gamma(2.5), abs=1e-10)


def test_fracderiv_power_rule(runner, tmp_path):
    out = tmp_path / "der.csv"
    result = runner.invoke(
        main,
        ["fracderiv", "--f", "t^2", "--alpha", "0.5", "--phi", "t", "--n", "257", "--out", str(out)],
    )
    assert result.exit_code == 0
    last = out.read_text().splitlines()[-1].split(",")
    ref = math.gamma(3.0) / math.gamma(2.5)
    assert float(last[1]) == pytest.approx(ref, rel=1e-4)


def test_residual_command_on_exact_solution(runner, tmp_path):
    cfg = write_config(tmp_path)
    data = json.loads(cfg.read_text())
    data["problem"]["betas"] = [[1.0, 0.0], [0.0, 0.0]]
    data["problem"]["coeffs"] = ["1"]
    data["problem"]["rhs"] = "1"
    data["numerics"]["N"] = 513
    cfg.write_text(json.dumps(data))
    out = tmp_path / "res.csv"
    result = runner.invoke(
        main,
        ["residual", "--config", str(cfg), "--out", str(out), "--x", "1 - exp(-t)"],
    )
    assert result.exit_code == 0, result.output
    summary = json.loads((tmp_path / "res.json").read_text())
    assert summary["residual_norm"] < 1e-4


def test_contraction_command(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "cert.json"
    result = runner.invoke(main, ["contraction", "--config", str(cfg), "--out", str(out)])
    assert result.exit_code == 0
    cert = json.loads(out.read_text())
    assert cert["satisfied"] is True
    assert 0 <= cert["C"] < 1
    assert cert["analytic_nu"] is not None


def test_canonical_command(runner, tmp_path):
    cfg = write_config(tmp_path)
    data = json.loads(cfg.read_text())
    data["problem"]["betas"] = [[1.5, 0.0], [0.5, 0.0], [0.0, 0.0]]
    data["problem"]["coeffs"] = ["1 + t", "0.5"]
    data["problem"]["rhs"] = "0"
    data["problem"]["init"] = [0.0, 0.0]
    cfg.write_text(json.dumps(data))
    out = tmp_path / "canon.csv"
    result = runner.invoke(main, ["canonical", "--config", str(cfg), "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "canon_x0.csv").exists()
    assert (tmp_path / "canon_x1.csv").exists()
    info = json.loads((tmp_path / "canon_classification.json").read_text())
    assert info["case_tag"] == "BETA_M_ZERO_N0_GT_N1"
    assert info["n"] == [2, 1, 0]
    assert info["Kj"] == [[2], [1, 2]]
    assert info["kappa"] == [2, 1]


def test_entry_point_runs():
    proc = subprocess.run(
        [sys.executable, "-m", "fracphi.cli", "--help"], capture_output=True, text=True
    )
    assert proc.returncode == 0
    assert "fractional" in proc.stdout


def test_solve_json_format(runner, tmp_path):
    cfg = write_config(tmp_path)
    out = tmp_path / "sol.json"
    result = runner.invoke(
        main, ["solve", "--config", str(cfg), "--out", str(out), "--format", "json", "--n", "65"]
    )
    assert result.exit_code == 0
    payload = json.loads(out.read_text())
    assert payload["status"] == "ok"
    assert len(payload["re_x"]) == 65
