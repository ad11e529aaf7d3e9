import math

import numpy as np
import pytest

from src.errors import BracketFailure, NoConvergence
from src.numerics import (
    gauss_legendre,
    gauss_legendre_on,
    parallel_map,
    periodic_integral,
    periodic_trapezoid,
    safeguarded_newton,
)


def test_gauss_legendre_polynomial_exactness():
    x, w = gauss_legendre(64)
    assert np.sum(w * x**10) == pytest.approx(2.0 / 11.0, abs=1e-14)
    assert np.sum(w) == pytest.approx(2.0, abs=1e-14)


def test_gauss_legendre_is_read_only():
    x, _ = gauss_legendre(8)
    with pytest.raises(ValueError):
        x[0] = 0.0


def test_gauss_legendre_on_panels():
    lo = np.array([0.0, 1.0])
    hi = np.array([math.pi, 2.0])
    nodes, weights = gauss_legendre_on(lo, hi, 32)
    assert nodes.shape == weights.shape == (2, 32)
    values = np.sum(np.sin(nodes) * weights, axis=-1)
    assert values[0] == pytest.approx(2.0, abs=1e-14)
    assert values[1] == pytest.approx(math.cos(1.0) - math.cos(2.0), abs=1e-14)


def test_periodic_trapezoid_is_exact_on_trig_polynomials():
    alpha, h = periodic_trapezoid(16)
    assert np.sum(np.cos(alpha) ** 2) * h == pytest.approx(math.pi, abs=1e-14)
    assert periodic_integral(np.cos(3 * alpha) * np.cos(5 * alpha)) == pytest.approx(0.0, abs=1e-14)


def test_periodic_trapezoid_on_half_period():
    alpha, h = periodic_trapezoid(8, period=math.pi)
    assert alpha[-1] == pytest.approx(7 * math.pi / 8)
    assert h == pytest.approx(math.pi / 8)


def test_safeguarded_newton_finds_bracketed_root():
    root, residual, iterations = safeguarded_newton(lambda x: (math.cos(x), -math.sin(x)), 0.0, 3.0, 1e-14)
    assert root == pytest.approx(math.pi / 2, abs=1e-14)
    assert residual <= 1e-14
    assert iterations > 0


def test_safeguarded_newton_with_decreasing_function():
    root, _, _ = safeguarded_newton(lambda x: (2.0 - x**3, -3 * x**2), 0.0, 2.0, 1e-14)
    assert root == pytest.approx(2.0 ** (1 / 3), abs=1e-14)


def test_safeguarded_newton_survives_flat_derivative():
    # Newton from the midpoint would jump far outside the bracket
    root, _, _ = safeguarded_newton(lambda x: (math.atan(x - 0.3), 1.0 / (1.0 + (x - 0.3) ** 2)),
                                    -50.0, 60.0, 1e-14, bisect_width=100.0)
    assert root == pytest.approx(0.3, abs=1e-13)


def test_unbracketed_root_raises():
    with pytest.raises(BracketFailure) as info:
        safeguarded_newton(lambda x: (x * x + 1.0, 2 * x), -1.0, 1.0, 1e-12)
    assert info.value.context["f_lo"] == pytest.approx(2.0)


def test_iteration_limit_raises_with_last_iterate():
    with pytest.raises(NoConvergence) as info:
        safeguarded_newton(lambda x: (x**3 - 2.0, 3 * x**2), 0.0, 2.0, 1e-15, max_iter=1, bisect_width=1.0)
    assert "last_x" in info.value.context
    assert info.value.context["iterations"] >= 1


@pytest.mark.parametrize("jobs", [1, 2, 4])
def test_parallel_map_preserves_order(jobs):
    items = list(range(20))
    assert parallel_map(lambda k: k * k, items, jobs) == [k * k for k in items]
