import json
import math
from pathlib import Path

import jsonschema
from openpyxl import load_workbook

from thermo_formalism.cli import EXIT_NOT_CONVERGED, EXIT_OK, EXIT_VALIDATION, main

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
SCHEMA = json.loads((ROOT / "thermo_formalism" / "schemas" / "report.schema.json").read_text(encoding="utf-8"))


def _run(config, out, *extra):
    return main(["--config", str(config), "--output", str(out), "-q", *extra])


def _load_report(path):
    report = json.loads(path.read_text(encoding="utf-8"))
    jsonschema.validate(report, SCHEMA)
    return report


def test_variational_check_on_swap(tmp_path):
    out = tmp_path / "report.json"
    assert _run(DATA / "swap_variational.toml", out) == EXIT_OK
    report = _load_report(out)
    assert report["status"] == "ok"
    assert math.isclose(report["values"]["lambda"], 1.5, abs_tol=1e-10)
    assert report["values"]["gap"] <= 1e-4
    assert report["diagnostics"]["young_residual"] <= 1e-6
    assert "timing" not in report


def test_reports_are_byte_identical(tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    assert _run(DATA / "swap_variational.toml", first) == EXIT_OK
    assert _run(DATA / "swap_variational.toml", second) == EXIT_OK
    assert first.read_bytes() == second.read_bytes()


def test_timing_flag_adds_wall_clock(tmp_path):
    out = tmp_path / "report.json"
    assert _run(DATA / "swap_variational.toml", out, "--timing") == EXIT_OK
    assert _load_report(out)["timing"]["wall_clock_sec"] >= 0


def test_dead_column_reports_minus_infinity(tmp_path):
    out = tmp_path / "report.json"
    assert _run(DATA / "nilpotent_t_entropy.toml", out) == EXIT_OK
    report = _load_report(out)
    assert report["values"]["tau"] == "-inf"
    assert all(value == "-inf" for value in report["values"]["per_n"])


def test_golden_mean_pressure(tmp_path):
    out = tmp_path / "report.json"
    assert _run(DATA / "golden_mean_pressure.json", out) == EXIT_OK
    report = _load_report(out)
    assert math.isclose(report["values"]["pressure"], math.log((1 + math.sqrt(5)) / 2), abs_tol=1e-10)


def test_lp_radius_csv_report(tmp_path):
    out = tmp_path / "report.csv"
    assert _run(DATA / "weighted_shift.yaml", out) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "section,key,index,value"
    assert "report,status,,ok" in lines


def test_negative_p_is_a_validation_error(tmp_path):
    config = tmp_path / "bad.yaml"
    config.write_text(
        "command: lp-radius\n"
        "system:\n"
        "  kind: measure_system\n"
        "  m: [0.5, 0.5]\n"
        "  beta: [1, 0]\n"
        "  psi: [1.0, 1.0]\n"
        "  p: -1.0\n",
        encoding="utf-8",
    )
    out = tmp_path / "report.json"
    assert _run(config, out) == EXIT_VALIDATION
    assert not out.exists()


def test_multi_start_requires_seed(tmp_path):
    config = tmp_path / "ls.toml"
    config.write_text(
        'command = "latushkin-stepin"\n'
        "[system]\n"
        'kind = "markov_shift"\n'
        "adjacency = [[1, 1], [1, 1]]\n"
        "rho = [[0.5, 0.5], [0.5, 0.5]]\n"
        "[parameters]\n"
        "p = 1.0\n",
        encoding="utf-8",
    )
    assert _run(config, tmp_path / "report.json") == EXIT_VALIDATION


def test_override_must_belong_to_command(tmp_path):
    out = tmp_path / "report.json"
    assert _run(DATA / "golden_mean_pressure.json", out, "--n-max", "8") == EXIT_VALIDATION


def test_xlsx_needs_output_path():
    assert main(["--config", str(DATA / "swap_variational.toml"), "--format", "xlsx", "-q"]) == EXIT_VALIDATION


def test_xlsx_report(tmp_path):
    out = tmp_path / "report.xlsx"
    assert _run(DATA / "swap_variational.toml", out, "--format", "xlsx") == EXIT_OK
    assert load_workbook(out).sheetnames == ["Summary", "Values", "Diagnostics", "Inputs"]


def test_numerical_failure_writes_error_report(tmp_path):
    config = tmp_path / "budget.json"
    config.write_text(
        json.dumps(
            {
                "command": "eval-lambda",
                "system": {"kind": "finite_map", "map": [1, 0], "psi": [1.0, 4.0]},
                "parameters": {"max_iter": 1},
            }
        ),
        encoding="utf-8",
    )
    out = tmp_path / "report.json"
    assert _run(config, out) == EXIT_NOT_CONVERGED
    report = _load_report(out)
    assert report["status"] == "error"
    assert report["error"].startswith("SpectralConvergenceError")
