"""
Command-line front end. Every subcommand loads a curve spec, runs one
operation and writes JSON (reports) or CSV (datasets) to --out, or to
stdout when --out is not given.

Exit status: 0 on success, 1 when a geometric hypothesis fails, 2 on a
numerical failure or a bad configuration.
"""
import argparse
import logging
import math
import os
import sys
from dataclasses import dataclass, field

from .config import DEFAULT_TOLERANCES, load_settings, parse_tolerance
from .curve import curve_to_spec, load_curve, require_valid, validate
from .dynamics import (
    PhasePoint,
    billiard_map,
    billiard_map_inverse,
    conjugate_map,
    delta_curve,
    iterate,
    radon_defect,
    rotation_number,
    verify_four_periodic,
)
from .errors import BilliardLabError, HypothesisError
from .experiments import DEFAULT_PROBE_ITERATIONS, DEFAULT_SEEDS, foliation_probe, phase_portrait, rigidity_report
from .integrals import Region, integral_region, integral_report, intA_check, intB_check, lemma1_check
from .normalize import isoperimetric_deficit, normalize, normalized_curve
from .reporting import dumps, write_csv, write_json
from .setup_logger import setup_logging

logger = logging.getLogger(__name__)

COMMANDS = (
    "validate", "map", "orbit", "rotation", "conjugate", "radon", "integrals",
    "identities", "normalize", "deficit", "report", "probe", "portrait",
)
# commands whose operations are only defined on centrally symmetric tables
SYMMETRIC_ONLY = {"conjugate", "radon", "integrals", "identities", "normalize"}
DEFAULT_GRID = 256


# ─── (1) Run configuration ────────────────────────────────────────────────────

@dataclass
class RunConfig:
    command: str
    curve_path: str
    tolerances: dict = field(default_factory=dict)
    nodes: int = None
    iters: int = None
    out: str = None
    jobs: int = None
    seeds: int = DEFAULT_SEEDS
    t1: float = 0.0
    t2: float = math.pi / 2
    t0: float = 0.0
    alpha: float = None
    inverse: bool = False
    region: str = None
    curve_out: str = None
    summary_out: str = None

    def check(self):
        """Reject configurations that cannot run; raises ValueError."""
        if self.command not in COMMANDS:
            raise ValueError(f"Unknown command {self.command!r}")
        if not self.curve_path or not os.path.isfile(self.curve_path):
            raise ValueError(f"Curve spec {self.curve_path!r} does not exist")
        bad = {name: value for name, value in self.tolerances.items() if not value > 0}
        if bad:
            raise ValueError(f"Tolerances must be > 0: {bad}")
        for name in ("nodes", "iters", "jobs", "seeds"):
            value = getattr(self, name)
            if value is not None and value < 1:
                raise ValueError(f"--{name} must be >= 1, got {value}")
        return self

    @classmethod
    def from_args(cls, args):
        tolerances = dict(parse_tolerance(text) for text in (args.tol or []))
        return cls(
            command=args.command,
            curve_path=args.curve,
            tolerances=tolerances,
            nodes=args.nodes,
            iters=args.iters,
            out=args.out,
            jobs=args.jobs,
            seeds=args.seeds,
            t1=args.t1,
            t2=args.t2,
            t0=args.t0,
            alpha=args.alpha,
            inverse=args.inverse,
            region=args.region,
            curve_out=args.curve_out,
            summary_out=args.summary,
        ).check()


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--curve", required=True, help="curve spec JSON file")
    common.add_argument("--tol", action="append", metavar="NAME=VALUE",
                        help=f"override a tolerance; names: {', '.join(DEFAULT_TOLERANCES)}")
    common.add_argument("--nodes", type=int, help="quadrature nodes / sampling grid size")
    common.add_argument("--iters", type=int, help="number of map iterates")
    common.add_argument("--out", help="output file (JSON or CSV); stdout when omitted")
    common.add_argument("--jobs", type=int, help="worker threads for independent evaluations")
    common.add_argument("--log-level", default=None, help="DEBUG, INFO, WARNING or ERROR")
    common.add_argument("--t1", type=float, default=0.0, help="first phase coordinate (radians)")
    common.add_argument("--t2", type=float, default=math.pi / 2, help="second phase coordinate (radians)")
    common.add_argument("--t0", type=float, default=0.0, help="transversal t = t0 for probes and portraits")
    common.add_argument("--alpha", type=float, help="tangent angle for the conjugate map")
    common.add_argument("--seeds", type=int, default=DEFAULT_SEEDS, help="number of seeds on the transversal")

    parser = argparse.ArgumentParser(
        prog="billiard-lab",
        description="Symplectic billiards on centrally symmetric tables: maps, orbits and rigidity checks.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "validate": "check positivity, strong convexity and symmetry of the support function",
        "map": "apply the billiard map (or its inverse) to (t1, t2)",
        "orbit": "iterate the map and write the orbit as CSV",
        "rotation": "Birkhoff estimate of the rotation number",
        "conjugate": "sample Phi on a grid (CSV) or evaluate it at --alpha (JSON)",
        "radon": "Radon defect of the table",
        "integrals": "region integrals of the rigidity integrand",
        "identities": "intA, intB and the three-region equality",
        "normalize": "affine normalization killing the second harmonics",
        "deficit": "isoperimetric deficit L^2 - 4 pi A",
        "report": "full rigidity report with verdict",
        "probe": "rotation numbers along a transversal",
        "portrait": "phase-portrait point clouds as CSV",
    }
    subparsers = {name: sub.add_parser(name, parents=[common], help=helps[name]) for name in COMMANDS}
    for sp in subparsers.values():
        sp.set_defaults(inverse=False, region=None, curve_out=None, summary=None)
    subparsers["map"].add_argument("--inverse", action="store_true", help="apply the inverse map")
    subparsers["integrals"].add_argument("--region", choices=[r.value for r in Region],
                                         help="single region; all of them when omitted")
    subparsers["normalize"].add_argument("--curve-out", help="write the normalized curve spec here")
    subparsers["probe"].add_argument("--summary", help="JSON summary path (the CSV goes to --out)")
    return parser


# ─── (2) Subcommands ──────────────────────────────────────────────────────────

def _emit_json(payload, path):
    text = write_json(payload, path)
    if not path:
        sys.stdout.write(text)


def _emit_csv(frame, path):
    text = write_csv(frame, path)
    if not path:
        sys.stdout.write(text)


def _phase_point(config):
    return PhasePoint(config.t1, config.t2)


def cmd_validate(curve, settings, config):
    diagnostics = validate(curve, settings.validation_grid)
    _emit_json(diagnostics, config.out)
    return 0 if diagnostics.passed else 1


def cmd_map(curve, settings, config):
    pp = _phase_point(config)
    if config.inverse:
        image = billiard_map_inverse(curve, pp, settings.tol("map"), settings.map_max_iter)
    else:
        image = billiard_map(curve, pp, settings.tol("map"), settings.map_max_iter)
    _emit_json({"input": pp, "output": image, "inverse": config.inverse}, config.out)
    return 0


def cmd_orbit(curve, settings, config):
    orbit = iterate(curve, _phase_point(config), config.iters or 100, settings.tol("map"), settings.map_max_iter)
    _emit_csv(orbit.to_frame(curve), config.out)
    return 0


def cmd_rotation(curve, settings, config):
    estimate = rotation_number(curve, _phase_point(config), config.iters or 1000,
                               settings.tol("map"), settings.map_max_iter)
    _emit_json({"seed": _phase_point(config), "rotation": estimate}, config.out)
    return 0


def cmd_conjugate(curve, settings, config):
    if config.alpha is None:
        samples = delta_curve(curve, config.nodes or DEFAULT_GRID, settings.tol("conjugate"))
        _emit_csv(samples.to_frame(), config.out)
        return 0
    phi = conjugate_map(curve, config.alpha, settings.tol("conjugate"))
    payload = {"alpha": config.alpha, "phi": phi}
    defect = radon_defect(curve, config.nodes or DEFAULT_GRID, settings.tol("conjugate"))
    if defect < settings.tol("radon"):
        payload["four_periodic"] = verify_four_periodic(curve, config.alpha, settings.tol("map"),
                                                        settings.tol("conjugate"), settings.map_max_iter)
    _emit_json(payload, config.out)
    return 0


def cmd_radon(curve, settings, config):
    grid_n = config.nodes or DEFAULT_GRID
    defect = radon_defect(curve, grid_n, settings.tol("conjugate"))
    _emit_json({"radon_defect": defect, "grid_n": grid_n, "tol": settings.tol("radon"),
                "radon": defect < settings.tol("radon")}, config.out)
    return 0


def cmd_integrals(curve, settings, config):
    if config.region is None:
        _emit_json(integral_report(curve, settings), config.out)
        return 0
    nodes = max(settings.quadrature_nodes, 2 * curve.k_max)
    result = integral_region(curve, config.region, nodes, settings.gauss_nodes, settings.tol("quadrature"),
                             settings.tol("conjugate"), settings.tol("radon"), max(nodes, DEFAULT_GRID))
    _emit_json(result, config.out)
    return 0


def cmd_identities(curve, settings, config):
    nodes = max(settings.quadrature_nodes, 2 * curve.k_max)
    payload = {
        "intA": intA_check(curve, nodes, settings.tol("quadrature")),
        "intB": intB_check(curve, nodes, settings.tol("quadrature")),
    }
    status = 0
    try:
        payload["lemma1"] = lemma1_check(curve, settings.tol("radon"), nodes, settings.gauss_nodes,
                                         settings.tol("quadrature"), settings.tol("conjugate"))
    except HypothesisError as exc:
        logger.warning(f"Three-region equality not applicable: {exc.message}")
        payload["lemma1"] = exc.to_record()
        status = exc.exit_code
    _emit_json(payload, config.out)
    return status


def cmd_normalize(curve, settings, config):
    result = normalize(curve, settings.tol("normalize"), settings.normalize_max_iter,
                       projection_tol=settings.tol("projection"))
    image = normalized_curve(curve, result, tol=settings.tol("projection"))
    spec = curve_to_spec(image)
    if config.curve_out:
        _emit_json(spec, config.curve_out)
    payload = result.to_dict()
    payload["normalized_curve"] = spec
    _emit_json(payload, config.out)
    return 0


def cmd_deficit(curve, settings, config):
    _emit_json({"isoperimetric_deficit": isoperimetric_deficit(curve)}, config.out)
    return 0


def cmd_report(curve, settings, config):
    _emit_json(rigidity_report(curve, settings, probe_iterations=config.iters), config.out)
    return 0


def cmd_probe(curve, settings, config):
    probe = foliation_probe(curve, config.t0, n_seeds=config.seeds, n=config.iters or DEFAULT_PROBE_ITERATIONS,
                            tol=settings.tol("map"), max_iter=settings.map_max_iter, jobs=settings.jobs)
    _emit_csv(probe.to_frame(), config.out)
    if config.summary_out:
        _emit_json({"monotone": probe.monotone, "dispersion": probe.dispersion,
                    "seeds": len(probe.seeds), "iterations": config.iters or DEFAULT_PROBE_ITERATIONS},
                   config.summary_out)
    return 0


def cmd_portrait(curve, settings, config):
    seeds = [PhasePoint(config.t0, config.t0 + d)
             for d in [0.1 + (math.pi - 0.2) * i / max(config.seeds - 1, 1) for i in range(config.seeds)]]
    portrait = phase_portrait(curve, seeds, config.iters or 200, settings.tol("map"), settings.map_max_iter,
                              settings.tol("radon"), config.nodes or DEFAULT_GRID, settings.tol("conjugate"),
                              settings.jobs)
    _emit_csv(portrait, config.out)
    return 0


HANDLERS = {
    "validate": cmd_validate,
    "map": cmd_map,
    "orbit": cmd_orbit,
    "rotation": cmd_rotation,
    "conjugate": cmd_conjugate,
    "radon": cmd_radon,
    "integrals": cmd_integrals,
    "identities": cmd_identities,
    "normalize": cmd_normalize,
    "deficit": cmd_deficit,
    "report": cmd_report,
    "probe": cmd_probe,
    "portrait": cmd_portrait,
}


# ─── (3) Entry point ──────────────────────────────────────────────────────────

def _fail(record, code):
    sys.stdout.write(dumps(record))
    return code


def run(argv=None):
    """Parse `argv`, run one subcommand and return its exit status."""
    args = build_parser().parse_args(argv)
    if args.log_level:
        setup_logging(args.log_level)

    try:
        config = RunConfig.from_args(args)
        settings = load_settings(config.tolerances, quadrature_nodes=config.nodes, jobs=config.jobs)
    except ValueError as exc:
        logger.error(f"Bad configuration: {exc}")
        return _fail({"error": "ConfigError", "family": "config", "message": str(exc), "context": {}}, 2)

    try:
        curve = load_curve(config.curve_path, k_max=settings.k_max, tol=settings.tol("projection"))
        if config.command not in ("validate", "report"):
            require_valid(curve, settings.validation_grid, symmetric=config.command in SYMMETRIC_ONLY)
        return HANDLERS[config.command](curve, settings, config)
    except BilliardLabError as exc:
        logger.error(f"{config.command} failed with {type(exc).__name__}: {exc.message}")
        return _fail(exc.to_record(), exc.exit_code)
    except (ValueError, KeyError, OSError) as exc:
        logger.error(f"{config.command} failed: {exc}")
        return _fail({"error": type(exc).__name__, "family": "config", "message": str(exc), "context": {}}, 2)
