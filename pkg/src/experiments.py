"""
Desk-scale runs of the rigidity argument: one report per table with a
verdict, sweeps over families of tables, foliation probes along a
transversal and phase-portrait datasets.

Verdicts are consistency checks. Nothing here certifies that phase space
is foliated by invariant curves.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import pandas as pd

from .config import Settings
from .curve import area, perimeter, validate
from .dynamics import PhasePoint, conjugate_map, iterate, radon_defect, rotation_from_orbit
from .errors import BilliardLabError
from .integrals import Region, arc_length_functional, closed_form_F, integral_region, rho_squared_integral
from .normalize import NormalizationResult, isoperimetric_deficit, normalize, normalized_curve
from .numerics import parallel_map

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
DEFAULT_SEEDS = 33
DEFAULT_S_RANGE = (0.1, math.pi - 0.1)
DEFAULT_PROBE_ITERATIONS = 400


class Verdict(Enum):
    CONSISTENT_WITH_ELLIPSE = "consistent_with_ellipse"
    HYPOTHESES_FAIL = "hypotheses_fail"
    INEQUALITY_VIOLATED = "inequality_violated"


# ─── (1) Foliation probe ──────────────────────────────────────────────────────

@dataclass(frozen=True)
class FoliationProbe:
    seeds: tuple
    rotation_values: tuple
    dispersions: tuple
    monotone: bool
    dispersion: float

    def to_frame(self):
        return pd.DataFrame({
            "t1": [seed.t1 for seed in self.seeds],
            "t2": [seed.t2 for seed in self.seeds],
            "gap": [seed.gap for seed in self.seeds],
            "rotation": [r.value for r in self.rotation_values],
            "error_bound": [r.error_bound for r in self.rotation_values],
            "dispersion": list(self.dispersions),
        })

    def to_dict(self):
        return {
            "seeds": [seed.to_dict() for seed in self.seeds],
            "rotation_values": [r.to_dict() for r in self.rotation_values],
            "dispersions": list(self.dispersions),
            "monotone": self.monotone,
            "dispersion": self.dispersion,
        }


def _window_dispersion(samples, value):
    """Largest deviation of windowed Birkhoff quotients from the whole-orbit value."""
    t = np.asarray(samples, dtype=float)
    n = t.size - 1
    w = max(1, n // 8)
    quotients = (t[w:] - t[:-w]) / (TWO_PI * w)
    return float(np.max(np.abs(quotients - value)))


def foliation_probe(curve, t0=0.0, s_range=DEFAULT_S_RANGE, n_seeds=DEFAULT_SEEDS,
                    n=DEFAULT_PROBE_ITERATIONS, tol=1e-13, max_iter=100, jobs=1):
    """
    Rotation numbers of orbits seeded along the transversal {t = t0}, at
    s - t0 evenly spread over `s_range`. A foliated phase space gives values
    non-decreasing in s (within their 1/n bounds) and small dispersion.
    """
    lo, hi = s_range
    if not (0.0 < lo < hi < math.pi):
        raise ValueError(f"Seed gaps must satisfy 0 < lo < hi < pi, got {s_range}")
    seeds = tuple(PhasePoint(float(t0), float(t0 + d)) for d in np.linspace(lo, hi, n_seeds))

    def probe(seed):
        orbit = iterate(curve, seed, n - 1, tol, max_iter)
        estimate = rotation_from_orbit(orbit)
        return estimate, _window_dispersion(orbit.samples, estimate.value)

    results = parallel_map(probe, seeds, jobs)
    values = tuple(r[0] for r in results)
    dispersions = tuple(r[1] for r in results)
    monotone = all(
        b.value >= a.value - (a.error_bound + b.error_bound) for a, b in zip(values[:-1], values[1:])
    )
    result = FoliationProbe(seeds, values, dispersions, monotone, float(max(dispersions, default=0.0)))
    logger.info(f"Foliation probe at t0={t0:.4g}: {n_seeds} seeds, monotone={monotone}, "
                f"dispersion {result.dispersion:.3g}")
    if not monotone:
        logger.warning("Rotation numbers along the transversal are not monotone within their bounds")
    return result


# ─── (2) Phase portraits ──────────────────────────────────────────────────────

def phase_portrait(curve, seeds, n, tol=1e-13, max_iter=100, radon_tol=1e-8, grid_n=256,
                   conjugate_tol=1e-12, jobs=1):
    """
    Plot-ready point clouds (t mod 2 pi, s - t) of the orbits from each seed,
    plus the graph of delta when the Radon defect is below `radon_tol`.
    Columns: kind, seed, step, t_mod, gap.
    """
    seeds = [seed if isinstance(seed, PhasePoint) else PhasePoint(*seed) for seed in seeds]
    orbits = parallel_map(lambda seed: iterate(curve, seed, n, tol, max_iter), seeds, jobs)

    frames = []
    for index, orbit in enumerate(orbits):
        t = np.asarray(orbit.samples, dtype=float)
        frames.append(pd.DataFrame({
            "kind": "orbit",
            "seed": index,
            "step": np.arange(t.size - 1),
            "t_mod": np.mod(t[:-1], TWO_PI),
            "gap": np.diff(t),
        }))

    defect = radon_defect(curve, grid_n, conjugate_tol)
    if defect < radon_tol:
        alpha = TWO_PI * np.arange(grid_n) / grid_n
        phi = conjugate_map(curve, alpha, conjugate_tol)
        frames.append(pd.DataFrame({
            "kind": "delta",
            "seed": -1,
            "step": np.arange(grid_n),
            "t_mod": alpha,
            "gap": phi - alpha,
        }))
    else:
        logger.info(f"Radon defect {defect:.3g}: delta graph left out of the portrait")

    portrait = pd.concat(frames, ignore_index=True)
    logger.info(f"Phase portrait with {len(seeds)} orbits, {len(portrait)} points")
    return portrait


# ─── (3) Rigidity reports ─────────────────────────────────────────────────────

@dataclass
class RigidityReport:
    area: float = math.nan
    perimeter: float = math.nan
    isoperimetric_deficit: float = math.nan
    radon_defect: float = math.nan
    F_closed: float = math.nan
    region_integrals: dict = field(default_factory=dict)
    normalization: NormalizationResult = None
    F_normalized: float = math.nan
    normalized_deficit: float = math.nan
    F_scale: float = math.nan
    normalized_F_scale: float = math.nan
    normalized_perimeter: float = math.nan
    arc_length_functional: float = math.nan
    verdict: Verdict = Verdict.HYPOTHESES_FAIL
    validation: dict = field(default_factory=dict)
    foliation: FoliationProbe = None
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "area": self.area,
            "perimeter": self.perimeter,
            "isoperimetric_deficit": self.isoperimetric_deficit,
            "radon_defect": self.radon_defect,
            "F_closed": self.F_closed,
            "region_integrals": self.region_integrals,
            "normalization": self.normalization.to_dict() if self.normalization else None,
            "F_normalized": self.F_normalized,
            "normalized_deficit": self.normalized_deficit,
            "F_scale": self.F_scale,
            "normalized_F_scale": self.normalized_F_scale,
            "normalized_perimeter": self.normalized_perimeter,
            "arc_length_functional": self.arc_length_functional,
            "verdict": self.verdict.value,
            "validation": self.validation,
            "foliation": self.foliation.to_dict() if self.foliation else None,
            "failures": self.failures,
        }


def _annotate(report, stage, exc):
    record = exc.to_record()
    record["stage"] = stage
    report.failures.append(record)
    logger.error(f"{stage} failed: {exc.message}")


def assign_verdict(report, tol, radon_tol):
    """
    hypotheses_fail when the table is invalid or not Radon; otherwise
    inequality_violated unless F_closed is non-positive, the normalization converged,
    F vanishes on the normalized table and so does its isoperimetric deficit.
    F is measured against (int rho^2)^2 of the same table and the deficit
    against the squared perimeter, so the verdict does not depend on scale.
    """
    if not report.validation.get("passed", False):
        return Verdict.HYPOTHESES_FAIL
    if not report.radon_defect < radon_tol:
        return Verdict.HYPOTHESES_FAIL
    if not report.F_closed <= tol * report.F_scale:
        return Verdict.INEQUALITY_VIOLATED
    normalization = report.normalization
    if normalization is None or not normalization.converged:
        return Verdict.INEQUALITY_VIOLATED
    if not abs(report.F_normalized) <= tol * report.normalized_F_scale:
        return Verdict.INEQUALITY_VIOLATED
    if not report.normalized_deficit < tol * report.normalized_perimeter ** 2:
        return Verdict.INEQUALITY_VIOLATED
    return Verdict.CONSISTENT_WITH_ELLIPSE


def rigidity_report(curve, settings=None, probe_iterations=None):
    """
    Run the whole chain on one table: validation, Radon defect, region
    integrals (delta-bounded ones only on Radon tables), closed-form F,
    normalization, F, the isoperimetric deficit and the arc-length functional
    of the normalized table.
    Library failures are logged and recorded in `failures`; the report is
    returned partially filled instead of raising.
    """
    settings = settings or Settings()
    report = RigidityReport()
    conj_tol = settings.tol("conjugate")
    radon_tol = settings.tol("radon")
    verdict_tol = settings.tol("verdict")

    diagnostics = validate(curve, settings.validation_grid)
    report.validation = diagnostics.to_dict()
    if not curve.symmetric:
        report.validation["passed"] = False
        report.failures.append({"stage": "validate", "error": "CurveValidationError", "family": "hypothesis",
                                "message": "table is not declared centrally symmetric", "context": {}})
    report.area = area(curve)
    report.perimeter = perimeter(curve)
    report.isoperimetric_deficit = isoperimetric_deficit(curve)
    if not report.validation["passed"]:
        logger.warning("Table fails validation; skipping the rigidity chain")
        report.verdict = assign_verdict(report, verdict_tol, radon_tol)
        return report

    nodes = max(settings.quadrature_nodes, 2 * curve.k_max)
    try:
        report.radon_defect = radon_defect(curve, max(nodes, 256), conj_tol)
    except BilliardLabError as exc:
        _annotate(report, "radon_defect", exc)

    regions = [Region.HALF_SQUARE]
    if settings.include_regions and report.radon_defect < radon_tol:
        regions = [Region.GAMMA_DELTA, Region.DELTA_GAMMASTAR, Region.HALF_SQUARE]

    def region_value(region):
        try:
            return integral_region(curve, region, nodes, settings.gauss_nodes, settings.tol("quadrature"),
                                   conj_tol, radon_tol, max(nodes, 256)).value, None
        except BilliardLabError as exc:
            return None, exc

    for region, (value, exc) in zip(regions, parallel_map(region_value, regions, settings.jobs)):
        report.region_integrals[region.value] = value
        if exc is not None:
            _annotate(report, f"integral_region[{region.value}]", exc)
    report.F_closed = closed_form_F(curve)
    report.F_scale = rho_squared_integral(curve) ** 2

    try:
        report.normalization = normalize(curve, settings.tol("normalize"), settings.normalize_max_iter,
                                         projection_tol=settings.tol("projection"))
    except BilliardLabError as exc:
        _annotate(report, "normalize", exc)
        ctx = exc.context
        report.normalization = NormalizationResult(
            float(ctx.get("a", math.nan)), float(ctx.get("sigma", math.nan)),
            float(ctx.get("residual_c2", math.nan)), float(ctx.get("residual_s2", math.nan)),
            int(ctx.get("iterations", 0)), False,
        )

    if report.normalization.converged:
        try:
            image = normalized_curve(curve, report.normalization, tol=settings.tol("projection"))
            report.F_normalized = closed_form_F(image)
            report.normalized_F_scale = rho_squared_integral(image) ** 2
            report.normalized_deficit = isoperimetric_deficit(image)
            report.normalized_perimeter = perimeter(image)
            report.arc_length_functional = arc_length_functional(image, tol=settings.tol("quadrature"))
        except BilliardLabError as exc:
            _annotate(report, "normalized_curve", exc)

    if probe_iterations:
        try:
            report.foliation = foliation_probe(curve, n=probe_iterations, tol=settings.tol("map"),
                                               max_iter=settings.map_max_iter, jobs=settings.jobs)
        except BilliardLabError as exc:
            _annotate(report, "foliation_probe", exc)

    report.verdict = assign_verdict(report, verdict_tol, radon_tol)
    logger.info(f"Rigidity verdict: {report.verdict.value} (radon {report.radon_defect:.3g}, "
                f"F {report.F_closed:.6g}, F normalized {report.F_normalized:.3g})")
    return report


def rigidity_sweep(curves, settings=None):
    """Rigidity reports for a family of tables, in input order whatever `settings.jobs` is."""
    settings = settings or Settings()
    curves = list(curves)
    logger.info(f"Sweeping {len(curves)} tables with {settings.jobs} worker(s)")
    return parallel_map(lambda curve: rigidity_report(curve, settings), curves, settings.jobs)
