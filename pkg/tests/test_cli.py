"""
Test the homsol command line end to end
"""

import json
import sys
from pathlib import Path

import pytest

# Add project root to Python path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

from app.main import run

GOLDEN = Path(__file__).parent / "golden"


def run_report(tmp_path, *argv, name="report.json"):
    out = tmp_path / name
    code = run(list(argv) + ["--out", str(out)])
    report = json.loads(out.read_text(encoding="utf-8")) if out.exists() else None
    return code, report


def test_classify_writes_report(tmp_path, capsys):
    code, report = run_report(tmp_path, "classify", "--op", "speclag:c=0", "--n", "3", "--d", "3")
    assert code == 0
    assert set(report) == {"config", "family", "diagnostics", "residuals", "version"}
    assert report["family"]["size"] == 7
    assert report["residuals"]["linearized"]["passed"] is True
    assert "Family: HarmonicPolynomialFamily" in capsys.readouterr().out


def test_classify_matches_golden(tmp_path):
    code, report = run_report(tmp_path, "classify", "--op", "linear:A=[[1,0],[0,1]]", "--n", "2", "--d", "3")
    assert code == 0
    expected = json.loads((GOLDEN / "classify_linear_n2_d3.json").read_text(encoding="utf-8"))
    assert report["family"] == expected
    print("✅ Golden classification test passed")


def test_report_config_reproduces_run(tmp_path):
    _, first = run_report(tmp_path, "classify", "--op", "speclag:c=0", "--n", "2", "--d", "-3", name="first.json")
    code, second = run_report(tmp_path, "classify", "--config", str(tmp_path / "first.json"), name="second.json")
    assert code == 0
    assert second["family"] == first["family"]
    assert second["diagnostics"] == first["diagnostics"]
    assert second["family"]["kind"] == "SingularHarmonicFamily"
    assert second["config"]["out"].endswith("second.json")


def test_degree_two_exits_with_classification_error(tmp_path, capsys):
    code, report = run_report(tmp_path, "classify", "--op", "speclag:c=0", "--n", "3", "--d", "2")
    assert code == 2
    assert report is None
    assert "d = 2" in capsys.readouterr().err


def test_usage_errors(tmp_path, capsys):
    assert run_report(tmp_path, "classify", "--n", "3", "--d", "3")[0] == 1
    assert "--op" in capsys.readouterr().err
    assert run(["integrate"]) == 1
    assert run([]) == 1
    assert run_report(tmp_path, "classify", "--op", "nonsense", "--n", "3", "--d", "3")[0] == 1
    assert run(["classify", "--config", str(tmp_path / "missing.json")]) == 1


def test_help_exits_cleanly(capsys):
    assert run(["--help"]) == 0
    assert "classify" in capsys.readouterr().out


def test_spectrum_on_circle(tmp_path):
    code, report = run_report(tmp_path, "spectrum", "--n", "2", "--grid", "64", "--k", "5")
    assert code == 0
    clusters = report["spectrum"]["clusters"]
    assert [c["multiplicity"] for c in clusters] == [1, 2, 2]
    assert [c["degree"] for c in clusters] == [0, 1, 2]
    assert report["diagnostics"]["constant_residual"] <= 1e-10
    for entry in report["residuals"].values():
        assert entry["relative_residual"] < 0.1


def test_verify_candidate_polynomial(tmp_path):
    code, report = run_report(
        tmp_path, "verify", "--op", "speclag:c=0", "--n", "3", "--d", "3", "--poly", "x1*x2*x3", "--samples", "200",
    )
    assert code == 0
    residuals = report["residuals"]
    assert sum(key.startswith("element[") for key in residuals) == 7
    assert residuals["candidate"]["passed"] is False
    assert residuals["candidate"]["sup_residual"] > 0.1
    assert residuals["candidate_homogeneity"]["passed"] is True
    assert residuals["candidate_scaling"]["passed"] is True


def test_verify_without_solutions_checks_zero_function(tmp_path):
    code, report = run_report(tmp_path, "verify", "--op", "speclag:c=0.3", "--n", "2", "--d", "3", "--samples", "50")
    assert code == 0
    assert report["family"]["kind"] == "NoSolutions"
    assert report["residuals"]["zero_function"]["sup_residual"] == pytest.approx(0.3)


def test_small_hunt(tmp_path):
    code, report = run_report(
        tmp_path, "hunt", "--op", "speclag:c=0", "--n", "2", "--d", "3",
        "--lmax", "3", "--seeds", "2", "--max-iters", "300", "--restarts", "0", "--samples", "60",
    )
    assert code == 0
    assert len(report["hunt_results"]) == 2
    assert report["diagnostics"]["basis_size"] == 7
    assert report["diagnostics"]["hunt_metrics"]["runs"] == 2
    assert report["config"]["seeds"] == 2
