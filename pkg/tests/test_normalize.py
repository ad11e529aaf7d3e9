import math

import numpy as np
import pytest

from src.curve import area, circle_curve, ellipse_curve, fourier_curve, radius_of_curvature
from src.errors import NoConvergence
from src.integrals import closed_form_F
from src.normalize import (
    NormalizationResult,
    canonical_parameters,
    isoperimetric_deficit,
    normalize,
    normalized_curve,
    second_harmonic_residuals,
)

from conftest import BUMP

SQRT2 = math.sqrt(2.0)


class TestNormalize:
    def test_circle_is_left_alone(self, circle):
        result = normalize(circle)
        assert (result.a, result.sigma) == (1.0, 0.0)
        assert result.iterations == 0
        assert result.converged

    def test_bumpy_has_no_second_harmonics(self, bumpy):
        result = normalize(bumpy)
        assert (result.a, result.sigma) == (1.0, 0.0)

    def test_axis_aligned_ellipse(self, ellipse21):
        result = normalize(ellipse21)
        assert result.converged
        assert result.a == pytest.approx(1 / SQRT2, abs=1e-8)
        assert result.sigma == pytest.approx(0.0, abs=1e-8)
        assert result.max_residual < 1e-10

    def test_rotated_ellipse(self, ellipse21_rotated):
        result = normalize(ellipse21_rotated)
        assert result.a == pytest.approx(1 / SQRT2, abs=1e-8)
        assert result.sigma == pytest.approx(math.pi / 6, abs=1e-8)

    def test_rotation_past_a_quarter_turn(self):
        result = normalize(ellipse_curve(2.0, 1.0, rotation=2.0))
        assert result.a == pytest.approx(SQRT2, abs=1e-8)
        assert result.sigma == pytest.approx(2.0 - math.pi / 2, abs=1e-8)

    def test_gives_up_after_max_iter(self, ellipse21):
        with pytest.raises(NoConvergence) as info:
            normalize(ellipse21, max_iter=0)
        assert info.value.context["iterations"] == 0
        assert {"a", "sigma", "residual_c2", "residual_s2"} <= set(info.value.context)

    @pytest.mark.parametrize("scale", [100.0, 1000.0])
    def test_large_ellipse(self, scale):
        result = normalize(ellipse_curve(2.0 * scale, scale, rotation=math.pi / 6))
        assert result.converged
        assert result.a == pytest.approx(1 / SQRT2, abs=1e-8)
        assert result.sigma == pytest.approx(math.pi / 6, abs=1e-8)

    def test_stop_test_follows_table_size(self):
        result = normalize(fourier_curve(1000.0, {2: 1e-8}))
        assert (result.a, result.sigma, result.iterations) == (1.0, 0.0, 0)
        assert result.converged

    def test_result_serializes(self, ellipse21):
        record = normalize(ellipse21).to_dict()
        assert set(record) == {"a", "sigma", "residual_c2", "residual_s2", "iterations", "converged"}


class TestCanonicalParameters:
    @pytest.mark.parametrize("raw, expected", [
        ((2.0, 0.3), (2.0, 0.3)),
        ((2.0, 0.3 + math.pi / 2), (0.5, 0.3)),
        ((2.0, 0.3 + math.pi), (2.0, 0.3)),
        ((2.0, 0.3 - math.pi / 2), (0.5, 0.3)),
        ((2.0, -1e-12), (2.0, 0.0)),
    ])
    def test_reduction(self, raw, expected):
        assert canonical_parameters(*raw) == pytest.approx(expected, abs=1e-12)


class TestNormalizedCurve:
    def test_ellipse_becomes_circle(self, ellipse21):
        image = normalized_curve(ellipse21, normalize(ellipse21))
        alpha = np.linspace(0.0, 2 * np.pi, 200)
        assert np.max(np.abs(radius_of_curvature(image, alpha) - SQRT2)) < 1e-6
        assert max(abs(r) for r in second_harmonic_residuals(image)) < 1e-10

    def test_keeps_area(self, ellipse21_rotated):
        image = normalized_curve(ellipse21_rotated, normalize(ellipse21_rotated))
        assert area(image) == pytest.approx(area(ellipse21_rotated), abs=1e-10)

    def test_normalizing_twice_is_the_identity(self, ellipse21_rotated):
        image = normalized_curve(ellipse21_rotated, normalize(ellipse21_rotated))
        again = normalize(image)
        assert (again.a, again.sigma) == pytest.approx((1.0, 0.0), abs=1e-8)

    def test_closes_the_rigidity_chain_on_ellipses(self, ellipse21):
        image = normalized_curve(ellipse21, normalize(ellipse21))
        assert abs(closed_form_F(image)) < 1e-8
        assert isoperimetric_deficit(image) < 1e-8

    def test_requires_converged_result(self, ellipse21):
        with pytest.raises(NoConvergence):
            normalized_curve(ellipse21, NormalizationResult(1.0, 0.0, 0.1, 0.1, 3, False))


class TestIsoperimetricDeficit:
    def test_circle(self, circle):
        assert isoperimetric_deficit(circle) == pytest.approx(0.0, abs=1e-10)

    def test_bumpy(self, bumpy):
        assert isoperimetric_deficit(bumpy) == pytest.approx(30 * BUMP**2 * math.pi**2, abs=1e-10)

    def test_ellipse_is_positive(self, ellipse21):
        assert isoperimetric_deficit(ellipse21) > 0.1

    def test_large_circle_stays_quiet(self, caplog):
        value = isoperimetric_deficit(circle_curve(1000.0))
        assert abs(value) < 1e-10 * (2000 * math.pi) ** 2
        assert "Negative" not in caplog.text
