import json

import numpy as np
import pytest

from critmode.cli import main
from critmode.model import save_system, build_system

from conftest import well_separated_system


def run(args):
    return main(args)


def test_analyze_quartic(tmp_path, capsys):
    code = run(["analyze", "--system", "catalog:quartic-jb4", "--out", str(tmp_path)])
    assert code == 0
    spectrum = json.loads((tmp_path / "spectrum.json").read_text())
    assert spectrum["nu"] == 1
    assert spectrum["blocks"][0]["M"] == 4
    verification = json.loads((tmp_path / "verification.json").read_text())
    assert verification["pass"] is True
    sumrules = json.loads((tmp_path / "sumrules.json").read_text())
    assert sumrules["pass"] is True
    assert "pass" in capsys.readouterr().out


def test_analyze_crossed_pair(tmp_path):
    code = run(["analyze", "--system", "catalog:crossed-pair", "--out", str(tmp_path)])
    assert code == 0
    spectrum = json.loads((tmp_path / "spectrum.json").read_text())
    assert sorted(b["M"] for b in spectrum["blocks"]) == [2, 2]


def test_analyze_random_diagonalizable(tmp_path):
    rng = np.random.default_rng(101)
    sys = well_separated_system(rng, 3)
    path = tmp_path / "sys.json"
    save_system(sys, path)
    code = run(["analyze", "--system", str(path), "--out", str(tmp_path)])
    assert code == 0
    spectrum = json.loads((tmp_path / "spectrum.json").read_text())
    assert spectrum["nu"] == 6
    assert all(b["M"] == 1 for b in spectrum["blocks"])


def test_exit_code_parse_error(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert run(["analyze", "--system", str(bad), "--out", str(tmp_path)]) == 2
    assert run(["analyze", "--system", "catalog:nope", "--out", str(tmp_path)]) == 2


def test_exit_code_env_tolerance_error(tmp_path, monkeypatch):
    monkeypatch.setenv("CRITMODE_TOL_OVERRIDE", "not json")
    assert run(["analyze", "--system", "catalog:quartic-jb4",
                "--out", str(tmp_path)]) == 2


def test_exit_code_verification_failure(tmp_path, monkeypatch):
    # an absurd residual tolerance turns healthy output into a failure
    monkeypatch.setenv("CRITMODE_TOL_OVERRIDE", json.dumps({"residual_tol": 1e-15}))
    code = run(["analyze", "--system", "catalog:quartic-jb4", "--out", str(tmp_path)])
    assert code == 3


def test_exit_code_numerical_failure(tmp_path):
    # epsilon so small the perturbed cluster cannot be resolved
    code = run([
        "cancellation", "--system", "catalog:quartic-jb4",
        "--eps-min", "1e-17", "--eps-max", "1e-16", "--eps-count", "2",
        "--out", str(tmp_path),
    ])
    assert code == 4


def test_env_tolerance_override_applies(tmp_path, monkeypatch):
    monkeypatch.setenv(
        "CRITMODE_TOL_OVERRIDE", json.dumps({"cluster_tol": 1e-5})
    )
    code = run(["analyze", "--system", "catalog:quartic-jb4", "--out", str(tmp_path)])
    assert code == 0
    spectrum = json.loads((tmp_path / "spectrum.json").read_text())
    assert spectrum["tolerances"]["cluster_tol"] == 1e-5


def test_evolve_echo_at_t0(tmp_path):
    code = run([
        "evolve", "--system", "catalog:single-critical", "--phi", "1,0",
        "--times", "0", "--out", str(tmp_path),
    ])
    assert code == 0
    lines = (tmp_path / "trajectory.csv").read_text().strip().splitlines()
    header = lines[0].split(",")
    row = [float(v) for v in lines[1].split(",")]
    assert header[0] == "t"
    assert row[header.index("c0_re")] == pytest.approx(1.0, abs=1e-12)
    assert row[header.index("c1_re")] == pytest.approx(0.0, abs=1e-12)


def test_evolve_oracle_deviation(tmp_path):
    code = run([
        "evolve", "--system", "catalog:single-critical", "--phi", "1,0",
        "--t-max", "5", "--t-steps", "11", "--oracle", "--out", str(tmp_path),
    ])
    assert code == 0
    summary = json.loads((tmp_path / "evolve_summary.json").read_text())
    assert summary["max_oracle_deviation"] <= 1e-8


def test_evolve_oracle_random_double(tmp_path):
    code = run([
        "evolve", "--system", "catalog:double-jb2", "--phi", "random",
        "--seed", "3", "--t-max", "5", "--t-steps", "6", "--oracle",
        "--out", str(tmp_path),
    ])
    assert code == 0
    summary = json.loads((tmp_path / "evolve_summary.json").read_text())
    assert summary["max_oracle_deviation"] <= 1e-8


def test_deterministic_output(tmp_path):
    out1 = tmp_path / "a"
    out2 = tmp_path / "b"
    for out in (out1, out2):
        assert run([
            "reproduce-figure", "--figure", "5", "--out", str(out),
        ]) == 0
    assert (out1 / "figure5.csv").read_bytes() == (out2 / "figure5.csv").read_bytes()
    assert (
        (out1 / "figure5_summary.json").read_bytes()
        == (out2 / "figure5_summary.json").read_bytes()
    )


def test_perturb_sweep_format(tmp_path):
    code = run([
        "perturb", "--system", "catalog:quartic-jb4", "--dk", "e11",
        "--eps0", "1e-4", "--eps-power", "4", "--eps-count", "5",
        "--out", str(tmp_path),
    ])
    assert code == 0
    lines = (tmp_path / "sweep.csv").read_text().strip().splitlines()
    assert lines[0] == "eps,k,num_re,num_im,pred_re,pred_im,abs_error"
    assert len(lines) == 1 + 5 * 4  # eps grid n = 0..4, four modes each
    pred = json.loads((tmp_path / "prediction.json").read_text())
    assert pred["generic"] is True
    assert pred["M"] == 4
    assert pred["xi"][0] == pytest.approx(-2.0, abs=1e-12)
    assert pred["xi"][1] == pytest.approx(0.0, abs=1e-12)


def test_perturb_nongeneric_direction(tmp_path):
    code = run([
        "perturb", "--system", "catalog:quartic-jb4", "--dk", "mu:1,-1.5,2",
        "--eps0", "1e-4", "--eps-power", "3", "--eps-count", "4",
        "--out", str(tmp_path),
    ])
    assert code == 0
    pred = json.loads((tmp_path / "prediction.json").read_text())
    assert pred["generic"] is False
    assert pred["xi_prime"][0] == pytest.approx(0.0, abs=1e-12)
    assert pred["xi_prime"][1] == pytest.approx(1.0, abs=1e-12)


def test_design_families(tmp_path):
    assert run([
        "design", "--family", "cubic", "--b", "4", "--gamma11", "6",
        "--out", str(tmp_path),
    ]) == 0
    obj = json.loads((tmp_path / "system.json").read_text())
    assert obj["N"] == 2
    sys = build_system(obj["K"], obj["Gamma"])
    assert np.allclose(sys.Gamma, [[6.0, 0.0], [0.0, 1.0]])
    assert run([
        "design", "--family", "scale", "--a", "2",
        "--system", str(tmp_path / "system.json"), "--out", str(tmp_path),
    ]) == 0
    scaled = json.loads((tmp_path / "system.json").read_text())
    assert np.allclose(scaled["Gamma"], [[12.0, 0.0], [0.0, 2.0]])


def test_design_catalog_export(tmp_path):
    assert run([
        "design", "--family", "catalog", "--name", "double-jb2",
        "--out", str(tmp_path),
    ]) == 0
    obj = json.loads((tmp_path / "catalog_double-jb2.json").read_text())
    assert obj["chains"]["0"][0]["surd"] == 6


def test_figure_grid_follows_caption_convention(tmp_path):
    assert run(["reproduce-figure", "--figure", "1", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "figure1.csv").read_text().strip().splitlines()
    eps_values = sorted({float(line.split(",")[0]) for line in lines[1:]})
    want = sorted((n**4) * 1e-4 for n in range(9))
    assert np.allclose(eps_values, want)


def test_figure1_equal_spacing(tmp_path):
    assert run(["reproduce-figure", "--figure", "1", "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "figure1_summary.json").read_text())
    assert summary["spacing_linearity_max_dev"] <= 0.05


def test_figure_rejects_bad_id(tmp_path):
    assert run(["reproduce-figure", "--figure", "7", "--out", str(tmp_path)]) == 2


def test_cancellation_cubic(tmp_path):
    code = run([
        "cancellation", "--system", "catalog:cubic-jb3", "--phi", "1,0,0,0",
        "--out", str(tmp_path),
    ])
    assert code == 0
    summary = json.loads((tmp_path / "cancellation_summary.json").read_text())
    # weights for an M = 3 block blow up like lambda^(-2)
    assert summary["weight_slope"] == pytest.approx(-2.0, abs=0.2)


def test_cancellation_diagonalizable_fallback(tmp_path):
    rng = np.random.default_rng(5)
    sys = well_separated_system(rng, 2)
    path = tmp_path / "sys.json"
    save_system(sys, path)
    code = run(["cancellation", "--system", str(path), "--out", str(tmp_path)])
    assert code == 0
    summary = json.loads((tmp_path / "cancellation_summary.json").read_text())
    assert summary["diagonalizable"] is True
    assert summary["max_weight"] <= 50.0  # O(1) weights, no small denominators
