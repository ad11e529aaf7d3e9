import math

import numpy as np
import pytest

from src.config import Settings
from src.curve import ellipse_curve, fourier_curve
from src.experiments import (
    RigidityReport,
    Verdict,
    assign_verdict,
    foliation_probe,
    phase_portrait,
    rigidity_report,
    rigidity_sweep,
)
from src.normalize import NormalizationResult
from src.reporting import dumps

from conftest import bumpy_curve

FAST = Settings(include_regions=False)
TOL = 1e-8


class TestVerdicts:
    def test_circle(self, circle):
        report = rigidity_report(circle)
        assert report.verdict is Verdict.CONSISTENT_WITH_ELLIPSE
        assert report.radon_defect < 1e-12
        assert abs(report.F_closed) < 1e-10
        assert report.isoperimetric_deficit == pytest.approx(0.0, abs=1e-10)
        assert set(report.region_integrals) == {"gamma-delta", "delta-gammastar", "half-square"}
        assert report.failures == []

    def test_ellipse(self, ellipse21):
        report = rigidity_report(ellipse21)
        assert report.verdict is Verdict.CONSISTENT_WITH_ELLIPSE
        assert report.F_closed < 0.0
        assert abs(report.F_normalized) < TOL
        assert report.normalized_deficit < TOL
        assert report.normalization.a == pytest.approx(1 / math.sqrt(2), abs=1e-8)
        assert report.arc_length_functional == pytest.approx(0.0, abs=1e-6)

    def test_bumpy(self, bumpy):
        report = rigidity_report(bumpy)
        assert report.verdict is Verdict.HYPOTHESES_FAIL
        assert report.radon_defect > 1e-4
        assert list(report.region_integrals) == ["half-square"]
        assert report.F_closed == pytest.approx(1.5375 * math.pi**2, rel=1e-10)

    def test_non_symmetric_table(self):
        report = rigidity_report(fourier_curve(1.0, {3: 0.01}, symmetric=False))
        assert report.verdict is Verdict.HYPOTHESES_FAIL
        assert report.failures[0]["stage"] == "validate"
        assert math.isnan(report.radon_defect)

    def test_invalid_table_stops_early(self):
        report = rigidity_report(fourier_curve(1.0, {4: 0.1}))
        assert report.verdict is Verdict.HYPOTHESES_FAIL
        assert report.validation["passed"] is False
        assert report.normalization is None

    def test_report_serializes(self, ellipse21):
        text = dumps(rigidity_report(ellipse21, FAST))
        assert '"verdict": "consistent_with_ellipse"' in text
        assert '"foliation": null' in text
        assert '"arc_length_functional": ' in text

    def test_probe_can_be_attached(self, circle):
        report = rigidity_report(circle, FAST, probe_iterations=40)
        assert report.foliation is not None
        assert report.foliation.monotone


@pytest.mark.parametrize("ratio, k_max, grid", [(1.5, 64, 4096), (3.0, 128, 4096), (5.0, 128, 16384)])
@pytest.mark.parametrize("rotation", [0.0, math.pi / 6, math.pi / 3])
def test_ellipse_family_is_consistent(ratio, k_max, grid, rotation):
    curve = ellipse_curve(ratio, 1.0, rotation=rotation, k_max=k_max)
    report = rigidity_report(curve, Settings(k_max=k_max, validation_grid=grid, include_regions=False))
    assert report.verdict is Verdict.CONSISTENT_WITH_ELLIPSE, report.failures


@pytest.mark.parametrize("scale", [10.0, 100.0, 1000.0])
def test_verdict_does_not_depend_on_size(scale):
    report = rigidity_report(ellipse_curve(2.0 * scale, scale, rotation=0.5), FAST)
    assert report.verdict is Verdict.CONSISTENT_WITH_ELLIPSE, report.failures
    assert report.failures == []
    assert report.normalization.a == pytest.approx(1 / math.sqrt(2), abs=1e-8)


def test_bumpy_family():
    eps_values = [0.01, 0.02, 0.03, 0.04, 0.05]
    reports = rigidity_sweep([bumpy_curve(eps) for eps in eps_values], FAST)
    for eps, report in zip(eps_values, reports):
        expected = (2 * math.pi + 225 * eps**2 * math.pi) * 240 * eps**2 * math.pi
        assert report.verdict is Verdict.HYPOTHESES_FAIL
        assert report.F_closed == pytest.approx(expected, rel=1e-6)
    assert all(a.F_closed < b.F_closed for a, b in zip(reports[:-1], reports[1:]))


def test_sweep_keeps_input_order(circle, bumpy, ellipse21):
    reports = rigidity_sweep([circle, bumpy, ellipse21], Settings(include_regions=False, jobs=2))
    assert [r.verdict for r in reports] == [
        Verdict.CONSISTENT_WITH_ELLIPSE, Verdict.HYPOTHESES_FAIL, Verdict.CONSISTENT_WITH_ELLIPSE]


class TestAssignVerdict:
    @staticmethod
    def passing_report(**changes):
        report = RigidityReport(
            radon_defect=0.0, F_closed=-1.0, F_normalized=0.0, normalized_deficit=0.0,
            F_scale=1.0, normalized_F_scale=1.0, normalized_perimeter=1.0,
            normalization=NormalizationResult(1.0, 0.0, 0.0, 0.0, 0, True), validation={"passed": True},
        )
        for name, value in changes.items():
            setattr(report, name, value)
        return report

    @pytest.mark.parametrize("changes", [
        {},
        {"F_closed": 1e-3, "F_scale": 1e6},
        {"F_normalized": -1e-3, "normalized_F_scale": 1e6},
        {"normalized_deficit": 1e-5, "normalized_perimeter": 1e2},
    ])
    def test_consistent(self, changes):
        assert assign_verdict(self.passing_report(**changes), TOL, TOL) is Verdict.CONSISTENT_WITH_ELLIPSE

    @pytest.mark.parametrize("changes", [
        {"validation": {"passed": False}},
        {"validation": {}},
        {"radon_defect": 1e-3},
        {"radon_defect": math.nan},
    ])
    def test_hypotheses_fail(self, changes):
        assert assign_verdict(self.passing_report(**changes), TOL, TOL) is Verdict.HYPOTHESES_FAIL

    @pytest.mark.parametrize("changes", [
        {"F_closed": 0.5},
        {"F_closed": math.nan},
        {"normalization": None},
        {"normalization": NormalizationResult(1.0, 0.0, 0.1, 0.0, 50, False)},
        {"F_normalized": -1e-6},
        {"normalized_deficit": 1e-3},
        {"normalized_deficit": math.nan},
        {"F_scale": math.nan},
        {"normalized_F_scale": math.nan},
        {"normalized_perimeter": math.nan},
        {"normalized_deficit": 1e-5, "normalized_perimeter": 10.0},
    ])
    def test_inequality_violated(self, changes):
        assert assign_verdict(self.passing_report(**changes), TOL, TOL) is Verdict.INEQUALITY_VIOLATED


class TestFoliationProbe:
    def test_circle_rotation_values(self, circle):
        probe = foliation_probe(circle, n_seeds=5, n=50)
        gaps = np.linspace(0.1, math.pi - 0.1, 5)
        values = [r.value for r in probe.rotation_values]
        np.testing.assert_allclose(values, gaps / (2 * math.pi), atol=1e-12)
        assert probe.monotone
        assert probe.dispersion < 1e-10

    def test_ellipse_is_monotone(self, ellipse21):
        probe = foliation_probe(ellipse21, n_seeds=9, n=100, jobs=2)
        assert probe.monotone
        assert len(probe.to_frame()) == 9

    def test_bumpy_reports_without_claims(self, bumpy):
        probe = foliation_probe(bumpy, t0=0.3, n_seeds=7, n=80)
        frame = probe.to_frame()
        assert list(frame.columns) == ["t1", "t2", "gap", "rotation", "error_bound", "dispersion"]
        assert (frame["rotation"] > 0.0).all() and (frame["rotation"] < 0.5).all()
        assert frame["error_bound"].iloc[0] == pytest.approx(1 / 80)

    def test_rejects_bad_range(self, circle):
        with pytest.raises(ValueError):
            foliation_probe(circle, s_range=(0.5, 0.2))


class TestPhasePortrait:
    def test_circle_orbits_and_delta(self, circle):
        portrait = phase_portrait(circle, [(0.0, 0.5), (0.0, 1.5)], 10, grid_n=32)
        assert list(portrait.columns) == ["kind", "seed", "step", "t_mod", "gap"]
        orbits = portrait[portrait["kind"] == "orbit"]
        assert len(orbits) == 22
        np.testing.assert_allclose(orbits.loc[orbits["seed"] == 1, "gap"], 1.5, atol=1e-12)
        delta = portrait[portrait["kind"] == "delta"]
        assert len(delta) == 32
        assert (delta["seed"] == -1).all()
        np.testing.assert_allclose(delta["gap"], math.pi / 2, atol=1e-12)

    def test_bumpy_has_no_delta_rows(self, bumpy):
        portrait = phase_portrait(bumpy, [(0.0, 1.0)], 30, jobs=2)
        assert set(portrait["kind"]) == {"orbit"}
        assert ((portrait["gap"] > 0.0) & (portrait["gap"] < math.pi)).all()
        assert ((portrait["t_mod"] >= 0.0) & (portrait["t_mod"] < 2 * math.pi)).all()
