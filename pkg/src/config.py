import os
import logging
from dataclasses import dataclass, field, replace
from types import MappingProxyType

logger = logging.getLogger(__name__)

# Named tolerances accepted by `--tol name=value` and BILLIARD_TOL_<NAME>.
DEFAULT_TOLERANCES = MappingProxyType({
    "map": 1e-13,          # |chord residual| of the billiard map root
    "conjugate": 1e-12,    # |det(e_beta, gamma(alpha))| at Phi(alpha)
    "radon": 1e-8,         # Radon defect threshold
    "quadrature": 1e-8,    # change allowed when doubling nodes
    "projection": 1e-10,   # Fourier tail left by a projection
    "normalize": 1e-10,    # second-harmonic residuals
    "verdict": 1e-8,       # rigidity verdict thresholds
})


@dataclass(frozen=True)
class Settings:
    """Numerical defaults shared by every operation of the lab."""

    k_max: int = 64
    validation_grid: int = 4096
    quadrature_nodes: int = 128
    gauss_nodes: int = 64
    map_max_iter: int = 100
    normalize_max_iter: int = 50
    jobs: int = 1
    include_regions: bool = True
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))

    def tol(self, name):
        try:
            return self.tolerances[name]
        except KeyError:
            raise KeyError(f"Unknown tolerance '{name}'. Known: {sorted(DEFAULT_TOLERANCES)}") from None

    def with_tolerances(self, **overrides):
        merged = dict(self.tolerances)
        merged.update(overrides)
        return replace(self, tolerances=merged)


_INT_FIELDS = {
    "k_max": "BILLIARD_K_MAX",
    "validation_grid": "BILLIARD_VALIDATION_GRID",
    "quadrature_nodes": "BILLIARD_NODES",
    "gauss_nodes": "BILLIARD_GAUSS_NODES",
    "map_max_iter": "BILLIARD_MAP_MAX_ITER",
    "normalize_max_iter": "BILLIARD_NORMALIZE_MAX_ITER",
    "jobs": "BILLIARD_JOBS",
}


def _env_int(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not an integer. Using default {default}.")
        return default


def _env_float(name, default):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        return float(raw)
    except ValueError:
        logger.warning(f"Ignoring {name}={raw!r}: not a number. Using default {default}.")
        return default


def parse_tolerance(text):
    """Parse one `name=value` tolerance override."""
    if "=" not in text:
        raise ValueError(f"Tolerance override '{text}' must look like name=value")
    name, raw = text.split("=", 1)
    name = name.strip()
    if name not in DEFAULT_TOLERANCES:
        raise ValueError(f"Unknown tolerance '{name}'. Known: {sorted(DEFAULT_TOLERANCES)}")
    value = float(raw)
    if not value > 0:
        raise ValueError(f"Tolerance '{name}' must be > 0, got {value}")
    return name, value


def load_settings(tolerances=None, **overrides):
    """
    Build Settings from BILLIARD_* environment variables (the `.env` file is
    loaded by Main.py through python-dotenv), then apply explicit overrides.
    """
    values = {key: _env_int(env, getattr(Settings, key)) for key, env in _INT_FIELDS.items()}
    tols = {name: _env_float(f"BILLIARD_TOL_{name.upper()}", default)
            for name, default in DEFAULT_TOLERANCES.items()}
    for name, value in (tolerances or {}).items():
        if name not in DEFAULT_TOLERANCES:
            raise ValueError(f"Unknown tolerance '{name}'. Known: {sorted(DEFAULT_TOLERANCES)}")
        tols[name] = float(value)
    for key, value in overrides.items():
        if value is not None:
            values[key] = value

    bad = {name: value for name, value in tols.items() if not value > 0}
    if bad:
        raise ValueError(f"All tolerances must be > 0: {bad}")
    if values["jobs"] < 1:
        logger.warning(f"jobs={values['jobs']} is not positive. Falling back to 1.")
        values["jobs"] = 1

    settings = Settings(tolerances=tols, **values)
    logger.debug(f"Loaded settings: {settings}")
    return settings
