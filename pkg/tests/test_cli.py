import json
import math

import pandas as pd
import pytest

from src.cli import run


def write_spec(tmp_path, name, spec):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(spec))
    return str(path)


@pytest.fixture
def specs(tmp_path):
    return {
        "circle": write_spec(tmp_path, "circle", {"type": "fourier", "a0": 1.0}),
        "ellipse": write_spec(tmp_path, "ellipse", {"type": "ellipse", "a": 2.0, "b": 1.0}),
        "bumpy": write_spec(tmp_path, "bumpy", {"type": "fourier", "a0": 1.0, "cos": {"4": 0.05}}),
        "concave": write_spec(tmp_path, "concave", {"type": "fourier", "a0": 1.0, "cos": {"4": 0.1}}),
        "lopsided": write_spec(tmp_path, "lopsided",
                               {"type": "fourier", "a0": 1.0, "cos": {"3": 0.01}, "symmetric": False}),
    }


def stdout_json(capsys):
    return json.loads(capsys.readouterr().out)


def test_identities_on_circle(specs, capsys):
    assert run(["identities", "--curve", specs["circle"]]) == 0
    payload = stdout_json(capsys)
    assert payload["intA"]["lhs"] == pytest.approx(-math.pi**2, abs=1e-10)
    assert payload["intB"]["rhs"] == pytest.approx(math.pi**2, abs=1e-10)
    assert payload["lemma1"]["max_difference"] < 1e-6


def test_identities_on_bumpy_flag_the_radon_hypothesis(specs, capsys):
    assert run(["identities", "--curve", specs["bumpy"]]) == 1
    assert stdout_json(capsys)["lemma1"]["error"] == "RadonHypothesisFailed"


def test_report_on_ellipse(specs, capsys):
    assert run(["report", "--curve", specs["ellipse"]]) == 0
    assert stdout_json(capsys)["verdict"] == "consistent_with_ellipse"


def test_report_on_invalid_table_still_succeeds(specs, capsys):
    assert run(["report", "--curve", specs["concave"]]) == 0
    assert stdout_json(capsys)["verdict"] == "hypotheses_fail"


def test_region_needs_radon_table(specs, capsys):
    assert run(["integrals", "--curve", specs["bumpy"], "--region", "gamma-delta"]) == 1
    record = stdout_json(capsys)
    assert record["error"] == "RadonHypothesisFailed"
    assert record["family"] == "hypothesis"


def test_single_region(specs, capsys):
    assert run(["integrals", "--curve", specs["circle"], "--region", "half-square"]) == 0
    assert stdout_json(capsys)["value"] == pytest.approx(0.0, abs=1e-10)


def test_large_table(tmp_path, capsys):
    spec = write_spec(tmp_path, "big", {"type": "ellipse", "a": 20.0, "b": 10.0})
    assert run(["integrals", "--curve", spec, "--region", "gamma-delta"]) == 0
    assert stdout_json(capsys)["value"] < 0.0
    assert run(["report", "--curve", spec]) == 0
    payload = stdout_json(capsys)
    assert payload["verdict"] == "consistent_with_ellipse"
    assert payload["failures"] == []


def test_normalize_writes_loadable_curve(specs, tmp_path, capsys):
    curve_out = tmp_path / "normalized.json"
    report_out = tmp_path / "normalize.json"
    assert run(["normalize", "--curve", specs["ellipse"], "--curve-out", str(curve_out),
                "--out", str(report_out)]) == 0
    report = json.loads(report_out.read_text())
    assert report["a"] == pytest.approx(1 / math.sqrt(2), abs=1e-8)
    assert json.loads(curve_out.read_text())["a0"] == pytest.approx(math.sqrt(2), abs=1e-8)

    for source in (curve_out, report_out):
        assert run(["deficit", "--curve", str(source)]) == 0
        assert stdout_json(capsys)["isoperimetric_deficit"] < 1e-8


def test_reports_are_deterministic(specs, tmp_path):
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    for path in (first, second):
        assert run(["report", "--curve", specs["ellipse"], "--out", str(path)]) == 0
    assert first.read_bytes() == second.read_bytes()


def test_orbit_csv(specs, tmp_path):
    out = tmp_path / "orbit.csv"
    assert run(["orbit", "--curve", specs["circle"], "--t1", "0", "--t2", str(math.pi / 2),
                "--iters", "8", "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert list(frame.columns) == ["step", "t_lifted", "x", "y", "residual"]
    assert len(frame) == 10
    assert frame["t_lifted"].iloc[-1] == pytest.approx(9 * math.pi / 2, abs=1e-10)


@pytest.mark.parametrize("inverse, expected", [(False, (math.pi / 3, 2 * math.pi / 3)), (True, (-math.pi / 3, 0.0))])
def test_map(specs, capsys, inverse, expected):
    argv = ["map", "--curve", specs["circle"], "--t1", "0", "--t2", str(math.pi / 3)]
    assert run(argv + (["--inverse"] if inverse else [])) == 0
    output = stdout_json(capsys)["output"]
    assert (output["t1"], output["t2"]) == pytest.approx(expected, abs=1e-12)


def test_map_outside_phase_space(specs, capsys):
    assert run(["map", "--curve", specs["circle"], "--t1", "0", "--t2", "4"]) == 1
    assert stdout_json(capsys)["error"] == "PhaseSpaceError"


def test_rotation(specs, capsys):
    assert run(["rotation", "--curve", specs["circle"], "--iters", "40"]) == 0
    assert stdout_json(capsys)["rotation"]["value"] == pytest.approx(0.25, abs=1e-12)


def test_conjugate_at_alpha(specs, capsys):
    assert run(["conjugate", "--curve", specs["ellipse"], "--alpha", "0"]) == 0
    payload = stdout_json(capsys)
    assert payload["phi"] == pytest.approx(math.pi / 2, abs=1e-12)
    assert payload["four_periodic"]["parallelogram_area"] == pytest.approx(4.0, abs=1e-9)


def test_conjugate_grid(specs, tmp_path):
    out = tmp_path / "phi.csv"
    assert run(["conjugate", "--curve", specs["circle"], "--nodes", "16", "--out", str(out)]) == 0
    assert len(pd.read_csv(out)) == 16


def test_radon(specs, capsys):
    assert run(["radon", "--curve", specs["bumpy"]]) == 0
    payload = stdout_json(capsys)
    assert payload["radon"] is False
    assert payload["radon_defect"] > 1e-4


def test_validate(specs, capsys):
    assert run(["validate", "--curve", specs["circle"]]) == 0
    assert stdout_json(capsys)["passed"] is True
    assert run(["validate", "--curve", specs["concave"]]) == 1
    assert stdout_json(capsys)["passed"] is False


def test_symmetric_only_commands(specs, capsys):
    assert run(["radon", "--curve", specs["lopsided"]]) == 1
    assert stdout_json(capsys)["error"] == "CurveValidationError"
    assert run(["deficit", "--curve", specs["lopsided"]]) == 0


@pytest.mark.parametrize("tol", ["map=-1", "bogus=1e-3", "map"])
def test_bad_tolerance(specs, capsys, tol):
    assert run(["radon", "--curve", specs["circle"], "--tol", tol]) == 2
    assert stdout_json(capsys)["error"] == "ConfigError"


def test_tolerance_override_is_used(specs, capsys):
    assert run(["radon", "--curve", specs["bumpy"], "--tol", "radon=1"]) == 0
    assert stdout_json(capsys)["radon"] is True


def test_missing_curve_file(tmp_path, capsys):
    assert run(["deficit", "--curve", str(tmp_path / "nope.json")]) == 2
    assert stdout_json(capsys)["family"] == "config"


def test_probe_with_summary(specs, tmp_path):
    out, summary = tmp_path / "probe.csv", tmp_path / "probe.json"
    assert run(["probe", "--curve", specs["circle"], "--seeds", "3", "--iters", "20",
                "--out", str(out), "--summary", str(summary)]) == 0
    assert len(pd.read_csv(out)) == 3
    record = json.loads(summary.read_text())
    assert record["monotone"] is True
    assert record["seeds"] == 3


def test_portrait(specs, tmp_path):
    out = tmp_path / "portrait.csv"
    assert run(["portrait", "--curve", specs["circle"], "--seeds", "2", "--iters", "5", "--nodes", "16",
                "--out", str(out)]) == 0
    frame = pd.read_csv(out)
    assert len(frame) == 2 * 6 + 16
    assert set(frame["kind"]) == {"orbit", "delta"}
