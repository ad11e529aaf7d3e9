"""
The symplectic billiard map on a strongly convex table in tangent-angle
parametrization, and the objects built from it: orbits, rotation numbers,
the conjugate-direction map Phi with its graph delta, the Radon defect and
the 4-periodic parallelogram orbits.

A phase point (t1, t2) lives in P = {0 < t2 - t1 < pi}. The image (t2, t3)
solves det(e_t2, gamma(t3) - gamma(t1)) = 0 with t3 in (t2, t2 + pi): the
tangent at the middle point is parallel to the chord of its neighbours.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .curve import det, eval_frame, eval_point, eval_support, unit_tangent
from .errors import (
    BilliardLabError,
    CurveValidationError,
    MonotonicityViolation,
    NoConvergence,
    PhaseSpaceError,
)
from .numerics import gauss_legendre_on, safeguarded_newton

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
# phase points closer than this to the diagonal or to the parallel-tangent curve are rejected
BOUNDARY_GAP = 1e-9
DEFAULT_MAP_TOL = 1e-13
DEFAULT_CONJUGATE_TOL = 1e-12
DEFAULT_GRID = 256


# ─── (1) Phase space ──────────────────────────────────────────────────────────

@dataclass(frozen=True)
class PhasePoint:
    """Lifted pair (t1, t2) of tangent angles."""

    t1: float
    t2: float

    @property
    def gap(self):
        return self.t2 - self.t1

    def shifted(self, offset):
        return PhasePoint(self.t1 + offset, self.t2 + offset)

    def to_dict(self):
        return {"t1": self.t1, "t2": self.t2}


def check_phase_point(pp):
    """Raise PhaseSpaceError unless BOUNDARY_GAP < t2 - t1 < pi - BOUNDARY_GAP."""
    gap = pp.gap
    if not (math.isfinite(pp.t1) and math.isfinite(pp.t2)):
        raise PhaseSpaceError(f"Phase point {pp} is not finite", t1=pp.t1, t2=pp.t2)
    if gap <= BOUNDARY_GAP or gap >= np.pi - BOUNDARY_GAP:
        raise PhaseSpaceError(
            f"Phase point ({pp.t1:.17g}, {pp.t2:.17g}) has gap {gap:.3g}, outside (0, pi) "
            f"or within {BOUNDARY_GAP:g} of its boundary",
            t1=pp.t1, t2=pp.t2, gap=gap,
        )


# ─── (2) The map and its inverse ──────────────────────────────────────────────

def _forward_root(curve, t1, t2, tol, max_iter):
    anchor = eval_point(curve, t1)
    e2 = unit_tangent(t2)

    def chord(s):
        point, tangent, _ = eval_frame(curve, s)
        # f'(s) = rho(s) sin(s - t2) > 0 on (t2, t2 + pi)
        return det(e2, point - anchor), det(e2, tangent)

    return safeguarded_newton(chord, t2, t2 + np.pi, tol, max_iter=max_iter)


def _backward_root(curve, t1, t2, tol, max_iter):
    far = eval_point(curve, t2)
    e1 = unit_tangent(t1)

    def chord(s):
        point, tangent, _ = eval_frame(curve, s)
        # g'(s) = -rho(s) sin(s - t1) > 0 on (t1 - pi, t1)
        return det(e1, far - point), -det(e1, tangent)

    return safeguarded_newton(chord, t1 - np.pi, t1, tol, max_iter=max_iter)


def billiard_map(curve, pp, tol=DEFAULT_MAP_TOL, max_iter=100, extend_boundary=False):
    """
    T(t1, t2) = (t2, t3).

    With `extend_boundary=True` the continuous extension to the closure of P
    is used on its two boundaries: diagonal points (t, t) are fixed and
    points (t, t + pi) of the 2-periodic boundary go to (t + pi, t + 2 pi).
    """
    if extend_boundary and (abs(pp.gap) <= BOUNDARY_GAP or abs(pp.gap - np.pi) <= BOUNDARY_GAP):
        return PhasePoint(pp.t2, pp.t2 + pp.gap)
    check_phase_point(pp)
    t3, residual, iterations = _forward_root(curve, pp.t1, pp.t2, tol, max_iter)
    logger.debug(f"T({pp.t1:.6g}, {pp.t2:.6g}) -> t3={t3:.17g} in {iterations} steps, residual {residual:.3g}")
    return PhasePoint(pp.t2, float(t3))


def billiard_map_inverse(curve, pp, tol=DEFAULT_MAP_TOL, max_iter=100):
    """T^-1(t1, t2) = (t0, t1) with t0 in (t1 - pi, t1)."""
    check_phase_point(pp)
    t0, residual, iterations = _backward_root(curve, pp.t1, pp.t2, tol, max_iter)
    logger.debug(f"T^-1({pp.t1:.6g}, {pp.t2:.6g}) -> t0={t0:.17g} in {iterations} steps, residual {residual:.3g}")
    return PhasePoint(float(t0), pp.t1)


# ─── (3) Orbits and rotation numbers ──────────────────────────────────────────

@dataclass(frozen=True)
class Orbit:
    """
    Lifted parameters t_0 < t_1 < ... < t_{N+1} and the chord residual of
    each of the N map applications (residuals[k] belongs to t_{k+2}).
    """

    samples: tuple
    residuals: tuple = ()

    @property
    def steps(self):
        return len(self.residuals)

    def phase_points(self):
        return [PhasePoint(a, b) for a, b in zip(self.samples[:-1], self.samples[1:])]

    def to_frame(self, curve):
        """Columns step, t_lifted, x, y, residual (seed rows carry no residual)."""
        t = np.asarray(self.samples, dtype=float)
        point = eval_point(curve, t)
        residual = np.concatenate([[np.nan, np.nan], np.asarray(self.residuals, dtype=float)])
        return pd.DataFrame({
            "step": np.arange(t.size),
            "t_lifted": t,
            "x": point.x,
            "y": point.y,
            "residual": residual[:t.size],
        })

    def to_dict(self):
        return {"samples": list(self.samples), "residuals": list(self.residuals)}


def iterate(curve, pp, n, tol=DEFAULT_MAP_TOL, max_iter=100):
    """Apply the map n times from pp; the orbit holds n + 2 lifted parameters."""
    if n < 0:
        raise ValueError(f"Number of iterates must be >= 0, got {n}")
    check_phase_point(pp)
    samples = [float(pp.t1), float(pp.t2)]
    residuals = []
    for step in range(n):
        t1, t2 = samples[-2], samples[-1]
        try:
            check_phase_point(PhasePoint(t1, t2))
            t3, residual, _ = _forward_root(curve, t1, t2, tol, max_iter)
        except BilliardLabError as exc:
            exc.context["step"] = step
            logger.error(f"Orbit from ({pp.t1:.6g}, {pp.t2:.6g}) failed at step {step}: {exc.message}")
            raise
        samples.append(float(t3))
        residuals.append(float(residual))
    logger.debug(f"Iterated {n} steps from ({pp.t1:.6g}, {pp.t2:.6g}); max residual "
                 f"{max(residuals, default=0.0):.3g}")
    return Orbit(tuple(samples), tuple(residuals))


@dataclass(frozen=True)
class RotationEstimate:
    value: float
    error_bound: float
    iterations: int

    def to_dict(self):
        return {"value": self.value, "error_bound": self.error_bound, "iterations": self.iterations}


def rotation_number(curve, pp, n, tol=DEFAULT_MAP_TOL, max_iter=100):
    """
    Birkhoff quotient (t_n - t_0) / (2 pi n) along the lifted orbit, with the
    bound 1/n that holds for any order-preserving lift. For orbits off an
    invariant curve this is reported without any claim of convergence.
    """
    if n < 1:
        raise ValueError(f"Rotation number needs n >= 1, got {n}")
    estimate = rotation_from_orbit(iterate(curve, pp, n - 1, tol, max_iter))
    value = estimate.value
    if not (value - estimate.error_bound > 0.0 and value + estimate.error_bound < 0.5):
        logger.warning(f"Rotation number {value:.6g} +- {estimate.error_bound:.3g} is not inside (0, 1/2); "
                       f"use more iterates")
    return estimate


def rotation_from_orbit(orbit):
    """Birkhoff quotient over all n = len(samples) - 1 advances of an orbit."""
    n = len(orbit.samples) - 1
    value = (orbit.samples[n] - orbit.samples[0]) / (TWO_PI * n)
    return RotationEstimate(float(value), 1.0 / n, int(n))


def action(curve, orbit):
    """Sum of the generating function L(t_k, t_{k+1}) = det(gamma(t_k), gamma(t_{k+1})) along an orbit."""
    point = eval_point(curve, np.asarray(orbit.samples, dtype=float))
    return float(np.sum(point.x[:-1] * point.y[1:] - point.y[:-1] * point.x[1:]))


# ─── (4) Conjugate directions and the delta curve ─────────────────────────────

def _wrap(angle):
    """Reduce to (-pi, pi]."""
    return np.pi - np.mod(np.pi - angle, TWO_PI)


def _conjugate(curve, alpha, polish=True):
    point = eval_point(curve, alpha)
    theta = np.arctan2(point.y, point.x)
    # <gamma(alpha), (cos alpha, sin alpha)> = p(alpha) > 0, so theta - alpha is in (-pi/2, pi/2)
    beta = alpha + 0.5 * np.pi + _wrap(theta - alpha)
    e = unit_tangent(beta)
    residual = det(e, point)
    if polish:
        beta = beta - residual / -e.dot(point)
        residual = det(unit_tangent(beta), point)
    return beta, residual, point


def conjugate_map(curve, alpha, tol=DEFAULT_CONJUGATE_TOL):
    """
    Phi(alpha): the beta in (alpha, alpha + pi) whose tangent e_beta is
    parallel to the position vector gamma(alpha). Accepts scalars or arrays.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    beta, residual, point = _conjugate(curve, alpha_arr)
    worst = np.abs(np.ravel(residual))
    # the residual is a length: measured against |gamma(alpha)| on large tables
    bad = ~(worst <= tol * np.maximum(1.0, np.ravel(np.hypot(point.x, point.y))))
    if bad.any():
        i = int(np.argmax(bad))
        raise NoConvergence(
            f"Conjugate direction residual {worst[i]:.3g} exceeds {tol:g}",
            alpha=float(np.ravel(alpha_arr)[i]), last_residual=float(worst[i]),
        )
    if alpha_arr.ndim == 0:
        return float(beta)
    return beta


def phi_iterate(curve, alpha, times, tol=DEFAULT_CONJUGATE_TOL):
    """Phi composed `times` times (lifted)."""
    beta = np.asarray(alpha, dtype=float)
    for _ in range(int(times)):
        beta = conjugate_map(curve, beta, tol)
    return float(beta) if np.ndim(beta) == 0 else beta


def _radon_ratio(curve, alpha, beta):
    # gamma(Phi(alpha)) is parallel to e_alpha exactly when Phi(Phi(alpha)) = alpha + pi
    image = eval_point(curve, beta)
    return np.abs(det(unit_tangent(alpha), image)) / image.norm()


@dataclass(frozen=True)
class ConjugateMapSamples:
    """Phi sampled on the uniform grid alpha_j = 2 pi j / n, with the pointwise Radon defect."""

    alpha: tuple
    phi: tuple
    defect: tuple
    half_period_residual: float = float("nan")

    @property
    def grid(self):
        return list(zip(self.alpha, self.phi))

    @property
    def max_defect(self):
        return float(max(self.defect, default=0.0))

    def to_frame(self):
        return pd.DataFrame({"alpha": self.alpha, "phi": self.phi, "defect": self.defect})

    def to_dict(self):
        return {
            "grid_n": len(self.alpha),
            "alpha": list(self.alpha),
            "phi": list(self.phi),
            "defect": list(self.defect),
            "max_defect": self.max_defect,
            "half_period_residual": self.half_period_residual,
        }


def delta_curve(curve, grid_n=DEFAULT_GRID, tol=DEFAULT_CONJUGATE_TOL):
    """
    Sample Phi on a uniform grid and check that it is strictly increasing and,
    on even grids, that Phi(alpha + pi) = Phi(alpha) + pi within 2 tol.
    """
    alpha = TWO_PI * np.arange(grid_n) / grid_n
    phi = conjugate_map(curve, alpha, tol)
    steps = np.diff(phi)
    if np.any(steps <= 0.0):
        i = int(np.argmin(steps))
        raise MonotonicityViolation(
            f"Phi is not increasing between alpha={alpha[i]:.6g} and alpha={alpha[i + 1]:.6g}",
            index=i, alpha=float(alpha[i]), step=float(steps[i]),
        )

    half_period = float("nan")
    if grid_n % 2 == 0:
        half = grid_n // 2
        half_period = float(np.max(np.abs(phi[half:] - phi[:half] - np.pi)))
        if half_period > 2.0 * tol:
            raise CurveValidationError(
                f"Phi(alpha + pi) - Phi(alpha) - pi reaches {half_period:.3g}; the table is not centrally symmetric",
                half_period_residual=half_period,
            )

    defect = _radon_ratio(curve, alpha, phi)
    samples = ConjugateMapSamples(tuple(alpha.tolist()), tuple(phi.tolist()), tuple(defect.tolist()), half_period)
    logger.info(f"Sampled Phi on {grid_n} nodes: max Radon defect {samples.max_defect:.3g}")
    return samples


def radon_defect(curve, grid_n=DEFAULT_GRID, tol=DEFAULT_CONJUGATE_TOL):
    """
    max_alpha |det(e_alpha, gamma(Phi(alpha)))| / |gamma(Phi(alpha))|; zero
    exactly when every parallelogram inscribed along delta closes up.
    """
    alpha = TWO_PI * np.arange(grid_n) / grid_n
    phi = conjugate_map(curve, alpha, tol)
    value = float(np.max(_radon_ratio(curve, alpha, phi)))
    logger.info(f"Computed radon defect {value:.3g} on {grid_n} nodes")
    return value


# ─── (5) Parallelogram orbits ─────────────────────────────────────────────────

@dataclass(frozen=True)
class FourPeriodicReport:
    alpha: float
    phi: float
    samples: tuple
    lift_residuals: tuple
    vertex_residuals: tuple
    action: float
    parallelogram_area: float

    @property
    def max_residual(self):
        return float(max(self.lift_residuals + self.vertex_residuals))

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "phi": self.phi,
            "samples": list(self.samples),
            "lift_residuals": list(self.lift_residuals),
            "vertex_residuals": list(self.vertex_residuals),
            "max_residual": self.max_residual,
            "action": self.action,
            "parallelogram_area": self.parallelogram_area,
        }


def verify_four_periodic(curve, alpha, tol=DEFAULT_MAP_TOL, conjugate_tol=DEFAULT_CONJUGATE_TOL, max_iter=100):
    """
    Start at (alpha, Phi(alpha)), apply the map four times and measure how far
    the orbit is from a closed parallelogram: |t_4 - t_0 - 2 pi|,
    |t_5 - t_1 - 2 pi|, |gamma(t_2) + gamma(t_0)| and |gamma(t_3) + gamma(t_1)|.
    Meaningful on tables with vanishing Radon defect.
    """
    phi = conjugate_map(curve, float(alpha), conjugate_tol)
    orbit = iterate(curve, PhasePoint(float(alpha), phi), 4, tol, max_iter)
    t = orbit.samples
    point = eval_point(curve, np.asarray(t[:4]))
    lift = (abs(t[4] - t[0] - TWO_PI), abs(t[5] - t[1] - TWO_PI))
    vertex = (
        float(np.hypot(point.x[2] + point.x[0], point.y[2] + point.y[0])),
        float(np.hypot(point.x[3] + point.x[1], point.y[3] + point.y[1])),
    )
    closed = Orbit(t[:5], orbit.residuals[:3])
    total = action(curve, closed)
    report = FourPeriodicReport(float(alpha), phi, t, lift, vertex, total, 0.5 * total)
    logger.info(f"Four-periodic check at alpha={alpha:.6g}: max residual {report.max_residual:.3g}, "
                f"parallelogram area {report.parallelogram_area:.12g}")
    return report


# ─── (6) Invariant area form ──────────────────────────────────────────────────

@dataclass(frozen=True)
class MeasureCheck:
    box: tuple
    source: float
    image: float
    relative_error: float
    nodes: int
    tol: float = 1e-6

    @property
    def passed(self):
        return self.relative_error < self.tol

    def to_dict(self):
        return {
            "box": list(self.box),
            "source": self.source,
            "image": self.image,
            "relative_error": self.relative_error,
            "nodes": self.nodes,
            "passed": self.passed,
        }


def _twist_weight(curve, t1, t2):
    p1, _, d2p1, _ = eval_support(curve, t1)
    p2, _, d2p2, _ = eval_support(curve, t2)
    return (d2p1 + p1) * (d2p2 + p2) * np.sin(t2 - t1)


def measure_preservation(curve, box=(0.3, 0.5, 1.2, 1.4), nodes=16, tol=1e-6, step=1e-5,
                         map_tol=DEFAULT_MAP_TOL, max_iter=100):
    """
    Compare the invariant weight of a box B = [a, b] x [c, d] of phase space,
    int_B L12 dt1 dt2, with int_B L12(T x) |det DT(x)| dx, which is the
    weight of T(B). DT = [[0, 1], [dt3/dt1, dt3/dt2]] comes from centred
    differences of t3 with the given step.
    """
    lo1, hi1, lo2, hi2 = (float(v) for v in box)
    x1, w1 = gauss_legendre_on(lo1, hi1, nodes)
    x2, w2 = gauss_legendre_on(lo2, hi2, nodes)
    t1, t2 = np.meshgrid(x1, x2, indexing="ij")
    weights = np.outer(w1, w2)

    def third(a, b):
        return _forward_root(curve, a, b, map_tol, max_iter)[0]

    for a, b in ((lo1, lo2), (lo1, hi2), (hi1, lo2), (hi1, hi2)):
        check_phase_point(PhasePoint(a, b))

    t3 = np.empty_like(t1)
    jac = np.empty_like(t1)
    for idx in np.ndindex(t1.shape):
        a, b = float(t1[idx]), float(t2[idx])
        t3[idx] = third(a, b)
        jac[idx] = -(third(a + step, b) - third(a - step, b)) / (2.0 * step)

    source = float(np.sum(weights * _twist_weight(curve, t1, t2)))
    image = float(np.sum(weights * _twist_weight(curve, t2, t3) * np.abs(jac)))
    relative = abs(image - source) / abs(source)
    check = MeasureCheck((lo1, hi1, lo2, hi2), source, image, relative, int(nodes), tol)
    if check.passed:
        logger.info(f"Invariant area form preserved on {check.box}: relative error {relative:.3g}")
    else:
        logger.warning(f"Invariant area form check on {check.box} off by {relative:.3g} (tol {tol:g})")
    return check
