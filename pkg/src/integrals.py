"""
Generating function L(t1, t2) = det(gamma(t1), gamma(t2)), its second
partials, the rigidity integrand (L11 + 2 L12 + L22) L12 and its integrals
over the regions cut out of phase space by the delta curve, together with
the closed forms they are checked against.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .config import Settings
from .curve import area, det, eval_frame, eval_point, eval_support, require_valid, unit_normal, unit_tangent
from .dynamics import conjugate_map, radon_defect
from .errors import NonConvergedQuadrature, RadonHypothesisFailed
from .numerics import gauss_legendre_on, parallel_map, periodic_trapezoid

logger = logging.getLogger(__name__)

TWIST_MARGIN = 0.05
# |L12 - rho1 rho2 sin(t2 - t1)| allowed before the cross-check complains
_TWIST_CROSSCHECK = 1e-10


class Region(Enum):
    GAMMA_DELTA = "gamma-delta"          # t in [0, 2pi], t <= s <= Phi(t)
    DELTA_GAMMASTAR = "delta-gammastar"  # t in [0, 2pi], Phi(t) <= s <= t + pi
    HALF_SQUARE = "half-square"          # [0, pi]^2

    @property
    def needs_delta(self):
        return self is not Region.HALF_SQUARE


# ─── (1) Generating function and partials ─────────────────────────────────────

def _as_result(value):
    return float(value) if np.ndim(value) == 0 else value


def _rho(curve, alpha):
    p, _, d2p, _ = eval_support(curve, alpha)
    return d2p + p


def _moved(change, magnitude, tol):
    """Doubling-test gate; `magnitude` integrates the absolute terms of the integrand, used once it exceeds 1."""
    return change > tol * max(1.0, magnitude)


def generating_function(curve, t1, t2):
    """L(t1, t2) = det(gamma(t1), gamma(t2)); broadcasts over array arguments."""
    return _as_result(det(eval_point(curve, t1), eval_point(curve, t2)))


def L_partials(curve, t1, t2):
    """
    (L11, L12, L22) = (det(gamma''(t1), gamma(t2)), det(gamma'(t1), gamma'(t2)),
    det(gamma(t1), gamma''(t2))). Each angle is evaluated once and the
    determinants broadcast, so t1[:, None] and t2[None, :] give a full grid.
    """
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    g1, d1, dd1 = eval_frame(curve, t1)
    g2, d2, dd2 = eval_frame(curve, t2)
    l11 = det(dd1, g2)
    l12 = det(d1, d2)
    l22 = det(g1, dd2)

    rho1 = _rho(curve, t1)
    rho2 = _rho(curve, t2)
    twist = rho1 * rho2 * np.sin(t2 - t1)
    drift = float(np.max(np.abs(l12 - twist), initial=0.0))
    if drift > _TWIST_CROSSCHECK * max(1.0, float(np.max(np.abs(twist), initial=0.0))):
        logger.warning(f"L12 departs from rho1 rho2 sin(t2 - t1) by {drift:.3g}")
    return _as_result(l11), _as_result(l12), _as_result(l22)


def _rigidity_kernel(l11, l12, l22):
    return (l11 + 2.0 * l12 + l22) * l12


def integrand(curve, t1, t2):
    """(L11 + 2 L12 + L22) L12."""
    l11, l12, l22 = L_partials(curve, t1, t2)
    return _as_result(_rigidity_kernel(np.asarray(l11), np.asarray(l12), np.asarray(l22)))


def _kernel_on(curve, kernel, t1, t2):
    """Kernel values and the same kernel on |L11|, |L12|, |L22|, which bounds their roundoff."""
    partials = [np.asarray(v) for v in L_partials(curve, t1, t2)]
    return kernel(*partials), kernel(*(np.abs(v) for v in partials))


# ─── (2) Region quadratures ───────────────────────────────────────────────────

@dataclass(frozen=True)
class RegionIntegral:
    region: Region
    value: float
    outer_nodes: int
    inner_nodes: int
    change: float

    def to_dict(self):
        return {
            "region": self.region.value,
            "value": self.value,
            "outer_nodes": self.outer_nodes,
            "inner_nodes": self.inner_nodes,
            "change_on_doubling": self.change,
        }


def _half_square(curve, nodes):
    t, h = periodic_trapezoid(nodes, period=np.pi)
    values, sizes = _kernel_on(curve, _rigidity_kernel, t[:, None], t[None, :])
    return float(np.sum(values) * h * h), float(np.sum(sizes) * h * h)


def _delta_region(curve, region, nodes, gauss_nodes, conjugate_tol):
    t, h = periodic_trapezoid(nodes)
    phi = conjugate_map(curve, t, conjugate_tol)
    lo, hi = (t, phi) if region is Region.GAMMA_DELTA else (phi, t + np.pi)
    s, w = gauss_legendre_on(lo, hi, gauss_nodes)
    values, sizes = _kernel_on(curve, _rigidity_kernel, t[:, None], s)
    return float(np.sum(values * w) * h), float(np.sum(sizes * w) * h)


def _region_value(curve, region, nodes, gauss_nodes, conjugate_tol):
    if region is Region.HALF_SQUARE:
        return _half_square(curve, nodes)
    return _delta_region(curve, region, nodes, gauss_nodes, conjugate_tol)


def integral_region(curve, region, nodes=128, gauss_nodes=64, tol=1e-8,
                    conjugate_tol=1e-12, radon_tol=1e-8, radon_grid=256):
    """
    Integrate (L11 + 2 L12 + L22) L12 over a region: periodic trapezoid in
    the outer variable, Gauss-Legendre on the Phi-bounded inner interval.
    The rule is rerun with doubled node counts and the change must stay
    below `tol`, relative to the integral of the absolute terms once that
    exceeds 1.

    The delta-bounded regions exist only on tables with vanishing Radon
    defect; RadonHypothesisFailed is raised otherwise.
    """
    region = Region(region)
    if region.needs_delta:
        defect = radon_defect(curve, radon_grid, conjugate_tol)
        if not defect < radon_tol:
            raise RadonHypothesisFailed(
                f"Radon defect {defect:.3g} is not below {radon_tol:g}; region {region.value} is undefined",
                radon_defect=defect, tol=radon_tol, region=region.value,
            )

    value, magnitude = _region_value(curve, region, nodes, gauss_nodes, conjugate_tol)
    refined, _ = _region_value(curve, region, 2 * nodes, 2 * gauss_nodes, conjugate_tol)
    change = abs(refined - value)
    if _moved(change, magnitude, tol):
        raise NonConvergedQuadrature(
            f"Integral over {region.value} moved by {change:.3g} when doubling nodes (tol {tol:g})",
            region=region.value, value=value, refined=refined, nodes=nodes, gauss_nodes=gauss_nodes,
        )
    inner = gauss_nodes if region.needs_delta else nodes
    logger.info(f"Integral over {region.value}: {value:.12g} ({nodes} x {inner} nodes, change {change:.3g})")
    return RegionIntegral(region, value, int(nodes), int(inner), change)


# ─── (3) Closed forms and identities ──────────────────────────────────────────

def _moments(curve, period, nodes=None):
    """int rho^2, int rho^2 cos 2a, int rho^2 sin 2a over [0, period)."""
    n = nodes or 4 * curve.k_max + 16
    alpha, h = periodic_trapezoid(n, period=period)
    p, _, d2p, _ = eval_support(curve, alpha)
    rho2 = (d2p + p) ** 2
    return (float(np.sum(rho2) * h),
            float(np.sum(rho2 * np.cos(2.0 * alpha)) * h),
            float(np.sum(rho2 * np.sin(2.0 * alpha)) * h))


def closed_form_F(curve):
    """
    F = -2 A R + R^2 - C^2 - S^2 with R, C, S the integrals over [0, 2 pi) of
    rho^2, rho^2 cos 2a and rho^2 sin 2a. For symmetric tables F equals four
    times the half-square integral.
    """
    r, c, s = _moments(curve, 2.0 * np.pi)
    value = -2.0 * area(curve) * r + r * r - c * c - s * s
    logger.info(f"Closed-form functional F = {value:.12g}")
    return float(value)


def rho_squared_integral(curve):
    """int_0^{2pi} rho^2; its square sets the scale of F, which has units of length^4."""
    return _moments(curve, 2.0 * np.pi)[0]


def _arc_length_value(curve, nodes):
    # with s the arc length, d gamma/ds = e, d2 gamma/ds2 = -n / rho and ds = rho d alpha,
    # so every 1/rho cancels against the measure
    alpha, h = periodic_trapezoid(nodes)
    t1, t2 = alpha[:, None], alpha[None, :]
    rho = _rho(curve, alpha)
    rho1, rho2 = rho[:, None], rho[None, :]
    g1, g2 = eval_point(curve, t1), eval_point(curve, t2)
    l12 = det(unit_tangent(t1), unit_tangent(t2))
    terms = (-det(unit_normal(t1), g2) * rho2, 2.0 * l12 * rho1 * rho2, -det(g1, unit_normal(t2)) * rho1)
    values = sum(terms) * l12
    sizes = sum(np.abs(term) for term in terms) * np.abs(l12)
    return float(np.sum(values) * h * h), float(np.sum(sizes) * h * h)


def arc_length_functional(curve, nodes=None, tol=1e-8):
    """
    int int (L11 + 2 L12 + L22) L12 ds1 ds2 over [0, L)^2 with L the
    generating function in the arc-length parameter s. Evaluated in the
    tangent angle, where the integrand is a trigonometric polynomial.
    Reported only: no closed form is checked against it. Scales as length^2
    and vanishes on circles.
    """
    nodes = nodes or 4 * curve.k_max + 16
    value, magnitude = _arc_length_value(curve, nodes)
    change = abs(_arc_length_value(curve, 2 * nodes)[0] - value)
    if _moved(change, magnitude, tol):
        raise NonConvergedQuadrature(
            f"Arc-length functional moved by {change:.3g} when doubling nodes (tol {tol:g})",
            value=value, nodes=nodes,
        )
    logger.info(f"Arc-length functional {value:.12g} ({nodes} nodes)")
    return value


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    lhs: float
    rhs: float
    residual: float
    relative: float
    nodes: int

    def to_dict(self):
        return {
            "name": self.name,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "residual": self.residual,
            "relative": self.relative,
            "nodes": self.nodes,
        }


def _square_integral(curve, nodes, kernel, tol, name):
    def once(n):
        t, h = periodic_trapezoid(n, period=np.pi)
        values, sizes = _kernel_on(curve, kernel, t[:, None], t[None, :])
        return float(np.sum(values) * h * h), float(np.sum(sizes) * h * h)

    value, magnitude = once(nodes)
    change = abs(once(2 * nodes)[0] - value)
    if _moved(change, magnitude, tol):
        raise NonConvergedQuadrature(
            f"{name} quadrature moved by {change:.3g} when doubling nodes (tol {tol:g})",
            identity=name, value=value, nodes=nodes,
        )
    return value


def _identity(name, lhs, rhs, nodes):
    residual = abs(lhs - rhs)
    scale = max(abs(lhs), abs(rhs))
    relative = residual / scale if scale > 0.0 else residual
    logger.info(f"{name}: lhs={lhs:.12g} rhs={rhs:.12g} residual={residual:.3g}")
    return IdentityCheck(name, float(lhs), float(rhs), float(residual), float(relative), int(nodes))


def intA_check(curve, nodes=128, tol=1e-8):
    """int_{[0,pi]^2} (L11 + L22) L12  against  -A int_0^pi rho^2."""
    nodes = max(nodes, 2 * curve.k_max)
    lhs = _square_integral(curve, nodes, lambda l11, l12, l22: (l11 + l22) * l12, tol, "intA")
    rho2, _, _ = _moments(curve, np.pi)
    return _identity("intA", lhs, -area(curve) * rho2, nodes)


def intB_check(curve, nodes=128, tol=1e-8):
    """2 int_{[0,pi]^2} L12^2  against  R^2 - C^2 - S^2 with moments over [0, pi)."""
    nodes = max(nodes, 2 * curve.k_max)
    lhs = 2.0 * _square_integral(curve, nodes, lambda l11, l12, l22: l12 * l12, tol, "intB")
    r, c, s = _moments(curve, np.pi)
    return _identity("intB", lhs, r * r - c * c - s * s, nodes)


@dataclass(frozen=True)
class Lemma1Report:
    I_gamma_delta: float
    I_delta_gammastar: float
    I_square: float

    @property
    def differences(self):
        return {
            "gamma_delta_vs_square": abs(self.I_gamma_delta - self.I_square),
            "delta_gammastar_vs_square": abs(self.I_delta_gammastar - self.I_square),
            "gamma_delta_vs_delta_gammastar": abs(self.I_gamma_delta - self.I_delta_gammastar),
        }

    @property
    def max_difference(self):
        return max(self.differences.values())

    def to_dict(self):
        return {
            "I_gamma_delta": self.I_gamma_delta,
            "I_delta_gammastar": self.I_delta_gammastar,
            "I_square": self.I_square,
            "differences": self.differences,
            "max_difference": self.max_difference,
        }


def lemma1_check(curve, tol=1e-8, nodes=128, gauss_nodes=64, quadrature_tol=1e-8, conjugate_tol=1e-12):
    """
    The three region integrals, which coincide on Radon tables.
    Raises RadonHypothesisFailed when the Radon defect is not below `tol`.
    """
    defect = radon_defect(curve, max(nodes, 256), conjugate_tol)
    if not defect < tol:
        raise RadonHypothesisFailed(
            f"Radon defect {defect:.3g} is not below {tol:g}; the delta curve does not exist",
            radon_defect=defect, tol=tol,
        )
    nodes = max(nodes, 2 * curve.k_max)
    values = [integral_region(curve, region, nodes, gauss_nodes, quadrature_tol, conjugate_tol, tol).value
              for region in (Region.GAMMA_DELTA, Region.DELTA_GAMMASTAR, Region.HALF_SQUARE)]
    report = Lemma1Report(*values)
    logger.info(f"Region integrals agree to {report.max_difference:.3g}")
    return report


def twist_min(curve, grid_n=100, margin=TWIST_MARGIN):
    """Minimum of L12 over t1 in [0, 2pi), t2 - t1 in [margin, pi - margin]."""
    t1, _ = periodic_trapezoid(grid_n)
    gaps = np.linspace(margin, np.pi - margin, grid_n)
    p, _, d2p, _ = eval_support(curve, t1)
    rho1 = d2p + p
    t2 = t1[:, None] + gaps[None, :]
    p2, _, d2p2, _ = eval_support(curve, t2)
    twist = rho1[:, None] * (d2p2 + p2) * np.sin(gaps)[None, :]
    i, j = np.unravel_index(int(np.argmin(twist)), twist.shape)
    value = float(twist[i, j])
    logger.info(f"Minimum twist {value:.6g} at t1={t1[i]:.4g}, gap={gaps[j]:.4g}")
    return value


# ─── (4) Aggregated report ────────────────────────────────────────────────────

@dataclass
class IntegralReport:
    I_gamma_delta: float
    I_delta_gammastar: float
    I_square: float
    F_closed: float
    intA_lhs: float
    intA_rhs: float
    intB_lhs: float
    intB_rhs: float
    residuals: dict
    quadrature_nodes: dict
    tolerances: dict
    radon_defect: float
    twist_min: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return {
            "I_gamma_delta": self.I_gamma_delta,
            "I_delta_gammastar": self.I_delta_gammastar,
            "I_square": self.I_square,
            "F_closed": self.F_closed,
            "intA_lhs": self.intA_lhs,
            "intA_rhs": self.intA_rhs,
            "intB_lhs": self.intB_lhs,
            "intB_rhs": self.intB_rhs,
            "residuals": self.residuals,
            "quadrature_nodes": self.quadrature_nodes,
            "tolerances": self.tolerances,
            "radon_defect": self.radon_defect,
            "twist_min": self.twist_min,
            "notes": self.notes,
        }


def integral_report(curve, settings=None):
    """
    Region integrals, closed-form F and the intA/intB identities in one
    report. Delta-bounded regions are skipped (left as None) when the Radon
    defect is not below the radon tolerance.
    """
    settings = settings or Settings()
    require_valid(curve, settings.validation_grid, symmetric=True)
    nodes = max(settings.quadrature_nodes, 2 * curve.k_max)
    quad_tol = settings.tol("quadrature")
    conj_tol = settings.tol("conjugate")
    notes = []

    defect = radon_defect(curve, max(nodes, 256), conj_tol)
    regions = [Region.HALF_SQUARE]
    if not settings.include_regions:
        notes.append("delta-bounded regions not requested")
    elif defect < settings.tol("radon"):
        regions = [Region.GAMMA_DELTA, Region.DELTA_GAMMASTAR, Region.HALF_SQUARE]
    else:
        notes.append(f"radon defect {defect:.3g} >= {settings.tol('radon'):g}: delta-bounded regions skipped")
        logger.warning(notes[-1])

    def run(region):
        return integral_region(curve, region, nodes, settings.gauss_nodes, quad_tol, conj_tol,
                               settings.tol("radon"), max(nodes, 256))

    results = {r.region: r for r in parallel_map(run, regions, settings.jobs)}
    square = results[Region.HALF_SQUARE].value
    gd = results[Region.GAMMA_DELTA].value if Region.GAMMA_DELTA in results else None
    dg = results[Region.DELTA_GAMMASTAR].value if Region.DELTA_GAMMASTAR in results else None

    F = closed_form_F(curve)
    int_a = intA_check(curve, nodes, quad_tol)
    int_b = intB_check(curve, nodes, quad_tol)

    residuals = {
        "intA": int_a.residual,
        "intB": int_b.residual,
        "F_vs_square": abs(F - 4.0 * square),
        "quadrature_change": {r.region.value: r.change for r in results.values()},
    }
    if gd is not None:
        residuals["lemma1"] = Lemma1Report(gd, dg, square).differences

    return IntegralReport(
        I_gamma_delta=gd,
        I_delta_gammastar=dg,
        I_square=square,
        F_closed=F,
        intA_lhs=int_a.lhs,
        intA_rhs=int_a.rhs,
        intB_lhs=int_b.lhs,
        intB_rhs=int_b.rhs,
        residuals=residuals,
        quadrature_nodes={"outer": nodes, "inner": settings.gauss_nodes, "identities": int_a.nodes},
        tolerances=dict(settings.tolerances),
        radon_defect=defect,
        twist_min=twist_min(curve),
        notes=notes,
    )
