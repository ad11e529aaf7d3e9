import logging
import math
from dataclasses import dataclass

import numpy as np

from .curve import DEFAULT_PROJECTION_TOL, AffineMap, apply_affine, area, perimeter, validate
from .errors import NoConvergence, ProjectionError

logger = logging.getLogger(__name__)

HALF_PI = 0.5 * math.pi
FD_STEP = 1e-6
# step halvings tried before a damped Newton step is accepted anyway
MAX_HALVINGS = 30


@dataclass(frozen=True)
class NormalizationResult:
    """
    Parameters of phi_{a,sigma} = diag(a, 1/a) after the rotation by -sigma,
    reduced to sigma in [0, pi/2), and the second-harmonic integrals of the
    image support function left at that point.
    """

    a: float
    sigma: float
    residual_c2: float
    residual_s2: float
    iterations: int
    converged: bool

    @property
    def affine_map(self):
        return AffineMap.normalizer(self.a, self.sigma)

    @property
    def max_residual(self):
        return max(abs(self.residual_c2), abs(self.residual_s2))

    def to_dict(self):
        return {
            "a": self.a,
            "sigma": self.sigma,
            "residual_c2": self.residual_c2,
            "residual_s2": self.residual_s2,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def second_harmonic_residuals(curve):
    """(int p cos 2psi, int p sin 2psi) over [0, 2 pi), i.e. pi times the k = 2 coefficients."""
    c2, s2 = curve.coefficient(2)
    return math.pi * c2, math.pi * s2


def canonical_parameters(a, sigma):
    """
    Reduce (a, sigma) to sigma in [0, pi/2). Shifting sigma by pi/2 while
    inverting a only rotates the image by a quarter turn, and a shift by pi
    changes nothing on a symmetric table.
    """
    m = math.floor(sigma / HALF_PI + 1e-9)
    sigma = sigma - m * HALF_PI
    if m % 2:
        a = 1.0 / a
    return a, max(sigma, 0.0)


def _initial_guess(curve):
    c2, s2 = curve.coefficient(2)
    amplitude = math.hypot(c2, s2)
    sigma0 = 0.5 * math.atan2(s2, c2)
    ratio = (curve.a0 - amplitude) / (curve.a0 + amplitude)
    a0 = math.sqrt(ratio) if ratio > 0 else 1.0
    return math.log(a0), sigma0


def normalize(curve, tol=1e-10, max_iter=50, k_max=None, projection_tol=DEFAULT_PROJECTION_TOL):
    """
    Find (a, sigma) such that the support function of phi_{a,sigma}(D) has no
    second harmonics.

    Damped Newton in (log a, sigma) on the residual map, with a forward
    difference Jacobian of relative step 1e-6 and step halving whenever the
    residual grows. Starts from the table's own k = 2 harmonics (amplitude
    gives a, phase gives sigma); if those already vanish, (1, 0) is returned.

    Residuals are compared with `tol` times a0 once a0 exceeds 1.

    Raises NoConvergence after `max_iter` steps with the last residuals.
    """
    k_max = k_max or curve.k_max
    limit = tol * max(1.0, abs(curve.a0))
    start = np.array(second_harmonic_residuals(curve))
    if np.max(np.abs(start)) < limit:
        logger.info("Second harmonics already vanish; normalizer is the identity")
        return NormalizationResult(1.0, 0.0, float(start[0]), float(start[1]), 0, True)

    def residual(x):
        image = apply_affine(curve, AffineMap.normalizer(math.exp(x[0]), x[1]), k_max, projection_tol)
        return np.array(second_harmonic_residuals(image))

    def trial_residual(x):
        # an overshooting step can give an image the Fourier basis cannot hold
        try:
            return residual(x)
        except ProjectionError:
            return np.full(2, np.inf)

    x = np.array(_initial_guess(curve))
    r = residual(x)
    iterations = 0
    while np.max(np.abs(r)) >= limit:
        if iterations >= max_iter:
            logger.error(f"Normalization stalled after {iterations} steps at residuals {r.tolist()}")
            raise NoConvergence(
                f"Normalization did not reach {limit:g} in {max_iter} steps",
                a=math.exp(x[0]), sigma=float(x[1]), residual_c2=float(r[0]), residual_s2=float(r[1]),
                iterations=iterations,
            )
        iterations += 1

        jac = np.empty((2, 2))
        for j in range(2):
            h = FD_STEP * max(1.0, abs(x[j]))
            probe = x.copy()
            probe[j] += h
            jac[:, j] = (residual(probe) - r) / h
        try:
            dx = np.linalg.solve(jac, -r)
        except np.linalg.LinAlgError:
            raise NoConvergence(
                "Singular Jacobian in normalization",
                a=math.exp(x[0]), sigma=float(x[1]), residual_c2=float(r[0]), residual_s2=float(r[1]),
                iterations=iterations,
            ) from None

        step = 1.0
        trial = x + dx
        r_trial = trial_residual(trial)
        for _ in range(MAX_HALVINGS):
            if np.linalg.norm(r_trial) < np.linalg.norm(r):
                break
            step *= 0.5
            trial = x + step * dx
            r_trial = trial_residual(trial)
        if not np.all(np.isfinite(r_trial)):
            trial, r_trial = x, r
        x, r = trial, r_trial
        logger.debug(f"Normalization step {iterations}: a={math.exp(x[0]):.15g}, sigma={x[1]:.15g}, "
                     f"|r|={np.max(np.abs(r)):.3g}, damping {step:g}")

    a, sigma = canonical_parameters(math.exp(x[0]), float(x[1]))
    final = residual(np.array([math.log(a), sigma]))
    result = NormalizationResult(a, sigma, float(final[0]), float(final[1]), iterations,
                                 bool(np.max(np.abs(final)) < limit))
    logger.info(f"Normalized with a={a:.15g}, sigma={sigma:.15g} in {iterations} steps "
                f"(residuals {final[0]:.3g}, {final[1]:.3g})")
    return result


def normalized_curve(curve, result, k_max=None, tol=DEFAULT_PROJECTION_TOL):
    """The table phi_{a,sigma}(D), reprojected onto the Fourier basis."""
    if not result.converged:
        raise NoConvergence("Cannot build the normalized table from a non-converged normalization",
                            **result.to_dict())
    image = apply_affine(curve, result.affine_map, k_max or curve.k_max, tol)
    diagnostics = validate(image)
    if not diagnostics.passed:
        logger.warning(f"Normalized table fails validation: {[f.invariant for f in diagnostics.failures]}")
    return image


def isoperimetric_deficit(curve):
    """L^2 - 4 pi A, non-negative with equality only for circles."""
    length = perimeter(curve)
    value = length ** 2 - 4.0 * math.pi * area(curve)
    if value < -1e-10 * max(1.0, length ** 2):
        logger.warning(f"Negative isoperimetric deficit {value:.3g}; check the quadrature size")
    logger.info(f"Isoperimetric deficit {value:.12g}")
    return float(value)
