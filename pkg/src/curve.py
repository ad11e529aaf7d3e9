"""
Strongly convex, origin-centred tables encoded by the Fourier series of their
support function in tangent-angle parametrization.

Conventions used throughout the package:
    e_alpha = (-sin a, cos a)      unit tangent at parameter a
    J(x, y) = (-y, x)              rotation by +pi/2
    det(v, w) = v_x w_y - v_y w_x  the area form omega

so that gamma(a) = p'(a) e_a - p(a) J e_a, gamma'(a) = rho(a) e_a with
rho = p'' + p, and <gamma(a), (cos a, sin a)> = p(a).
"""
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.fft import rfft

from .errors import CurveValidationError, ProjectionError
from .numerics import periodic_integral, periodic_trapezoid

logger = logging.getLogger(__name__)

DEFAULT_K_MAX = 64
DEFAULT_PROJECTION_TOL = 1e-10
DEFAULT_VALIDATION_GRID = 4096
# Fourier evaluations are chunked so that (points x harmonics) stays bounded.
_EVAL_CHUNK = 4096


# ─── Plane points and linear maps ─────────────────────────────────────────────

@dataclass(frozen=True)
class PlanePoint:
    """A point or vector of the plane. Components may be numpy arrays (grids)."""

    x: float
    y: float

    def __neg__(self):
        return PlanePoint(-self.x, -self.y)

    def __add__(self, other):
        return PlanePoint(self.x + other.x, self.y + other.y)

    def __sub__(self, other):
        return PlanePoint(self.x - other.x, self.y - other.y)

    def scale(self, factor):
        return PlanePoint(factor * self.x, factor * self.y)

    def dot(self, other):
        return self.x * other.x + self.y * other.y

    def norm(self):
        return np.hypot(self.x, self.y)


def det(v, w):
    """The area form omega(v, w) = det(v, w)."""
    return v.x * w.y - v.y * w.x


def unit_tangent(alpha):
    """e_alpha = (-sin alpha, cos alpha)."""
    return PlanePoint(-np.sin(alpha), np.cos(alpha))


def unit_normal(alpha):
    """Outward normal (cos alpha, sin alpha) at tangent angle alpha."""
    return PlanePoint(np.cos(alpha), np.sin(alpha))


@dataclass(frozen=True)
class AffineMap:
    """Linear part of a plane affinity; tables stay centred at the origin."""

    m11: float
    m12: float
    m21: float
    m22: float

    def __post_init__(self):
        d = self.m11 * self.m22 - self.m12 * self.m21
        if not math.isfinite(d) or d == 0.0:
            raise ValueError(f"Affine map is not invertible (det={d})")

    @classmethod
    def diagonal(cls, sx, sy):
        return cls(float(sx), 0.0, 0.0, float(sy))

    @classmethod
    def rotation(cls, theta):
        c, s = math.cos(theta), math.sin(theta)
        return cls(c, -s, s, c)

    @classmethod
    def normalizer(cls, a, sigma):
        """
        phi_{a,sigma}: rotate by -sigma (direction sigma onto the x axis),
        then apply the unimodular scaling (x, y) -> (a x, y / a).
        """
        return cls.diagonal(a, 1.0 / a).compose(cls.rotation(-sigma))

    @property
    def determinant(self):
        return self.m11 * self.m22 - self.m12 * self.m21

    @property
    def matrix(self):
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def compose(self, other):
        """self after other."""
        m = self.matrix @ other.matrix
        return AffineMap(*m.ravel().tolist())

    def apply(self, point):
        return PlanePoint(self.m11 * point.x + self.m12 * point.y,
                          self.m21 * point.x + self.m22 * point.y)

    def apply_transpose(self, point):
        return PlanePoint(self.m11 * point.x + self.m21 * point.y,
                          self.m12 * point.x + self.m22 * point.y)


# ─── Support curves ───────────────────────────────────────────────────────────

@dataclass(frozen=True)
class SupportCurve:
    """
    p(alpha) = a0 + sum_{k=2}^{K_max} cos_coeffs[k-2] cos(k alpha) + sin_coeffs[k-2] sin(k alpha).

    The k = 1 harmonics are absent by construction: they would translate the
    table away from the origin.
    """

    a0: float
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()
    symmetric: bool = True

    def __post_init__(self):
        cos_c = tuple(float(c) for c in self.cos_coeffs)
        sin_c = tuple(float(c) for c in self.sin_coeffs)
        n = max(len(cos_c), len(sin_c))
        cos_c += (0.0,) * (n - len(cos_c))
        sin_c += (0.0,) * (n - len(sin_c))
        object.__setattr__(self, "a0", float(self.a0))
        object.__setattr__(self, "cos_coeffs", cos_c)
        object.__setattr__(self, "sin_coeffs", sin_c)
        object.__setattr__(self, "symmetric", bool(self.symmetric))

    @property
    def k_max(self):
        return len(self.cos_coeffs) + 1

    @cached_property
    def harmonics(self):
        k = np.arange(2, self.k_max + 1, dtype=float)
        k.setflags(write=False)
        return k

    @cached_property
    def _cos(self):
        return np.asarray(self.cos_coeffs, dtype=float)

    @cached_property
    def _sin(self):
        return np.asarray(self.sin_coeffs, dtype=float)

    def coefficient(self, k):
        """(cos, sin) coefficient pair of harmonic k (zero outside the stored range)."""
        if k == 0:
            return self.a0, 0.0
        if 2 <= k <= self.k_max:
            return self.cos_coeffs[k - 2], self.sin_coeffs[k - 2]
        return 0.0, 0.0

    def max_odd_coefficient(self):
        odd = self.harmonics % 2 == 1
        if not odd.any():
            return 0.0
        return float(max(np.abs(self._cos[odd]).max(), np.abs(self._sin[odd]).max()))


def fourier_curve(a0, cos=None, sin=None, symmetric=True, k_max=None):
    """
    Build a SupportCurve from sparse harmonic dictionaries {k: coefficient}.
    Harmonic k = 1 is rejected: it would move the centre off the origin.
    """
    cos = {int(k): float(v) for k, v in (cos or {}).items()}
    sin = {int(k): float(v) for k, v in (sin or {}).items()}
    for k in list(cos) + list(sin):
        if k == 1:
            raise ValueError("Harmonic k=1 translates the table; centre it at the origin instead")
        if k < 2:
            raise ValueError(f"Harmonic index must be >= 2, got {k}")
    highest = max(list(cos) + list(sin) + [2])
    k_max = max(highest, k_max or DEFAULT_K_MAX)
    cos_c = [cos.get(k, 0.0) for k in range(2, k_max + 1)]
    sin_c = [sin.get(k, 0.0) for k in range(2, k_max + 1)]
    return SupportCurve(a0, tuple(cos_c), tuple(sin_c), symmetric)


def circle_curve(radius=1.0, k_max=DEFAULT_K_MAX):
    return fourier_curve(radius, symmetric=True, k_max=k_max)


# ─── Pointwise geometry ───────────────────────────────────────────────────────

def _support_chunk(curve, alpha):
    angles = np.multiply.outer(alpha, curve.harmonics)
    c, s = np.cos(angles), np.sin(angles)
    k = curve.harmonics
    a, b = curve._cos, curve._sin
    p = curve.a0 + c @ a + s @ b
    dp = c @ (k * b) - s @ (k * a)
    d2p = -(c @ (k**2 * a) + s @ (k**2 * b))
    d3p = s @ (k**3 * a) - c @ (k**3 * b)
    return p, dp, d2p, d3p


def eval_support(curve, alpha):
    """
    (p, p', p'', p''') at alpha, by termwise differentiation of the series.
    Accepts scalars or arrays of any shape.
    """
    alpha_arr = np.asarray(alpha, dtype=float)
    if alpha_arr.ndim == 0:
        return tuple(float(v) for v in _support_chunk(curve, float(alpha_arr)))

    flat = alpha_arr.ravel()
    step = max(1, _EVAL_CHUNK * 64 // max(curve.k_max, 64))
    parts = [_support_chunk(curve, flat[i:i + step]) for i in range(0, flat.size, step)]
    if not parts:
        empty = np.zeros(alpha_arr.shape)
        return empty, empty.copy(), empty.copy(), empty.copy()
    return tuple(np.concatenate([part[j] for part in parts]).reshape(alpha_arr.shape) for j in range(4))


def _frame(alpha, p, dp, d2p, d3p):
    e = unit_tangent(alpha)
    je = PlanePoint(-e.y, e.x)
    rho = d2p + p
    point = e.scale(dp) - je.scale(p)
    tangent = e.scale(rho)
    second = e.scale(d3p + dp) + je.scale(rho)
    return point, tangent, second


def eval_frame(curve, alpha):
    """gamma, gamma', gamma'' at alpha from a single series evaluation."""
    return _frame(alpha, *eval_support(curve, alpha))


def eval_point(curve, alpha):
    """gamma(alpha) = p'(alpha) e_alpha - p(alpha) J e_alpha."""
    return eval_frame(curve, alpha)[0]


def eval_tangent(curve, alpha):
    """gamma'(alpha) = (p'' + p)(alpha) e_alpha."""
    return eval_frame(curve, alpha)[1]


def eval_second(curve, alpha):
    """gamma''(alpha) = (p''' + p')(alpha) e_alpha + (p'' + p)(alpha) J e_alpha."""
    return eval_frame(curve, alpha)[2]


def radius_of_curvature(curve, alpha):
    p, _, d2p, _ = eval_support(curve, alpha)
    return d2p + p


def _quadrature_size(curve):
    # exact for the trigonometric polynomials of degree <= 2 K_max + 2 integrated here
    return 4 * curve.k_max + 16


def area(curve):
    """A = 1/2 int_0^{2pi} p (p'' + p) d alpha."""
    alpha, _ = periodic_trapezoid(_quadrature_size(curve))
    p, _, d2p, _ = eval_support(curve, alpha)
    return float(0.5 * periodic_integral(p * (d2p + p)))


def perimeter(curve):
    """L = int_0^{2pi} (p'' + p) d alpha."""
    alpha, _ = periodic_trapezoid(_quadrature_size(curve))
    p, _, d2p, _ = eval_support(curve, alpha)
    return float(periodic_integral(d2p + p))


# ─── Validation ───────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class ValidationFailure:
    invariant: str
    alpha: float
    value: float


@dataclass(frozen=True)
class CurveDiagnostics:
    grid_n: int
    min_p: float
    argmin_p: float
    min_rho: float
    argmin_rho: float
    margin_p: float
    margin_rho: float
    max_odd_coefficient: float
    symmetric: bool
    failures: tuple = field(default_factory=tuple)

    @property
    def passed(self):
        return not self.failures

    def to_dict(self):
        return {
            "passed": self.passed,
            "grid_n": self.grid_n,
            "min_p": self.min_p,
            "argmin_p": self.argmin_p,
            "min_rho": self.min_rho,
            "argmin_rho": self.argmin_rho,
            "margin_p": self.margin_p,
            "margin_rho": self.margin_rho,
            "max_odd_coefficient": self.max_odd_coefficient,
            "symmetric": self.symmetric,
            "failures": [vars(f) for f in self.failures],
        }


def validate(curve, grid_n=DEFAULT_VALIDATION_GRID):
    """
    Check p > 0 and rho = p'' + p > 0 on a uniform grid, widened by a
    Lipschitz margin from the coefficient norms, and the vanishing of odd
    harmonics when the curve is declared symmetric. Never raises.
    """
    alpha = 2.0 * np.pi * np.arange(grid_n) / grid_n
    p, _, d2p, _ = eval_support(curve, alpha)
    rho = d2p + p
    i_p, i_rho = int(np.argmin(p)), int(np.argmin(rho))

    k = curve.harmonics
    weight = np.abs(curve._cos) + np.abs(curve._sin)
    half_step = np.pi / grid_n
    margin_p = float(np.sum(k * weight) * half_step)
    margin_rho = float(np.sum(np.abs(k**3 - k) * weight) * half_step)

    failures = []
    if not p[i_p] - margin_p > 0.0:
        failures.append(ValidationFailure("support_positive", float(alpha[i_p]), float(p[i_p])))
    if not rho[i_rho] - margin_rho > 0.0:
        failures.append(ValidationFailure("strongly_convex", float(alpha[i_rho]), float(rho[i_rho])))
    odd = curve.max_odd_coefficient()
    if curve.symmetric and odd != 0.0:
        failures.append(ValidationFailure("central_symmetry", float("nan"), odd))

    diagnostics = CurveDiagnostics(
        grid_n=int(grid_n),
        min_p=float(p[i_p]), argmin_p=float(alpha[i_p]),
        min_rho=float(rho[i_rho]), argmin_rho=float(alpha[i_rho]),
        margin_p=margin_p, margin_rho=margin_rho,
        max_odd_coefficient=odd, symmetric=curve.symmetric,
        failures=tuple(failures),
    )
    if failures:
        logger.warning(f"Curve validation failed: {[f.invariant for f in failures]} "
                       f"(min p={diagnostics.min_p:.6g}, min rho={diagnostics.min_rho:.6g})")
    else:
        logger.info(f"Curve validated on {grid_n} nodes: min p={diagnostics.min_p:.6g}, "
                    f"min rho={diagnostics.min_rho:.6g}")
    return diagnostics


def require_valid(curve, grid_n=DEFAULT_VALIDATION_GRID, symmetric=False):
    """Raise CurveValidationError unless the curve passes validation."""
    diagnostics = validate(curve, grid_n)
    if not diagnostics.passed:
        first = diagnostics.failures[0]
        raise CurveValidationError(
            f"Curve fails '{first.invariant}' at alpha={first.alpha:.6g} (value {first.value:.6g})",
            diagnostics=diagnostics, failures=[vars(f) for f in diagnostics.failures],
        )
    if symmetric and not curve.symmetric:
        raise CurveValidationError("Operation requires a centrally symmetric curve", diagnostics=diagnostics)
    return diagnostics


# ─── Projection onto the Fourier basis ────────────────────────────────────────

def project_support(samples, k_max, symmetric, tol=DEFAULT_PROJECTION_TOL):
    """
    Discrete Fourier projection of support values sampled at
    alpha_j = 2 pi j / n. Harmonics above k_max form the tail and must stay
    below `tol`; so must the k = 1 pair, which cannot be represented.
    Odd harmonics are dropped for symmetric curves.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 2 * k_max + 2:
        raise ProjectionError(f"{n} samples cannot resolve K_max={k_max}", samples=n, k_max=k_max)
    spectrum = rfft(samples) / n
    a = 2.0 * spectrum.real
    b = -2.0 * spectrum.imag
    a0 = spectrum[0].real

    keep = np.arange(2, k_max + 1)
    cos_c = a[keep].copy()
    sin_c = b[keep].copy()
    if symmetric:
        odd = keep % 2 == 1
        cos_c[odd] = 0.0
        sin_c[odd] = 0.0

    tail = np.hypot(a[k_max + 1:n // 2], b[k_max + 1:n // 2])
    tail_max = float(tail.max()) if tail.size else 0.0
    first = float(np.hypot(a[1], b[1]))
    if symmetric:
        odd_all = np.arange(a.size) % 2 == 1
        leak = float(np.hypot(a[odd_all], b[odd_all]).max())
    else:
        leak = first
    limit = tol * max(1.0, abs(a0))
    if tail_max > limit:
        raise ProjectionError(
            f"Fourier tail {tail_max:.3g} exceeds tolerance {limit:.3g}; increase K_max (now {k_max})",
            tail=tail_max, tol=limit, k_max=k_max,
        )
    if leak > limit:
        raise ProjectionError(
            f"Projected support has a translating/odd component {leak:.3g} above {limit:.3g}",
            leak=leak, tol=limit,
        )
    logger.debug(f"Projected {n} samples onto K_max={k_max}; tail {tail_max:.3g}")
    return SupportCurve(a0, tuple(cos_c), tuple(sin_c), symmetric)


def _projection_grid(k_max):
    n = 8 * k_max
    return 2.0 * np.pi * np.arange(n) / n


def ellipse_curve(a, b, rotation=0.0, k_max=DEFAULT_K_MAX, tol=DEFAULT_PROJECTION_TOL):
    """
    Truncated Fourier projection of the ellipse support function
    p(alpha) = sqrt(a^2 cos^2(alpha - rotation) + b^2 sin^2(alpha - rotation)).
    """
    if not (a > 0 and b > 0):
        raise ValueError(f"Ellipse semi-axes must be positive, got a={a}, b={b}")
    alpha = _projection_grid(k_max)
    shifted = alpha - rotation
    values = np.sqrt((a * np.cos(shifted)) ** 2 + (b * np.sin(shifted)) ** 2)
    curve = project_support(values, k_max, symmetric=True, tol=tol)
    logger.info(f"Built ellipse a={a}, b={b}, rotation={rotation} with K_max={k_max}")
    return curve


def apply_affine(curve, affine, k_max=None, tol=DEFAULT_PROJECTION_TOL):
    """
    Support curve of the image table M(D): h_M(u) = |M^T u| p(M^T u / |M^T u|),
    sampled on a uniform grid of normals and projected back onto the basis.
    """
    k_max = k_max or curve.k_max
    alpha = _projection_grid(k_max)
    pulled = affine.apply_transpose(unit_normal(alpha))
    length = pulled.norm()
    source_angle = np.arctan2(pulled.y, pulled.x)
    p, _, _, _ = eval_support(curve, source_angle)
    return project_support(length * p, k_max, symmetric=curve.symmetric, tol=tol)


def affine_tangent_angle(affine, alpha):
    """
    Tangent-angle parameter, on the image table, of the image point M gamma(alpha).
    The image tangent is M e_alpha; with det M > 0 the orientation is kept.
    Returned in (-pi, pi]; callers unwrap sequences.
    """
    image = affine.apply(unit_tangent(alpha))
    if affine.determinant < 0:
        image = -image
    return np.arctan2(-image.x, image.y)


# ─── Curve spec files ─────────────────────────────────────────────────────────

def curve_from_spec(spec, k_max=None, tol=DEFAULT_PROJECTION_TOL):
    """
    Build a curve from a spec dictionary:
        {"type": "fourier", "a0": 1, "cos": {"4": 0.05}, "sin": {}, "symmetric": true}
        {"type": "ellipse", "a": 2, "b": 1, "rotation": 0.0}
    An optional "k_max" entry overrides `k_max`.
    """
    kind = spec.get("type")
    k_max = int(spec.get("k_max", k_max or DEFAULT_K_MAX))
    if kind == "fourier":
        return fourier_curve(spec["a0"], spec.get("cos", {}), spec.get("sin", {}),
                             symmetric=bool(spec.get("symmetric", True)), k_max=k_max)
    if kind == "ellipse":
        return ellipse_curve(float(spec["a"]), float(spec["b"]), float(spec.get("rotation", 0.0)),
                             k_max=k_max, tol=tol)
    raise ValueError(f"Unknown curve spec type {kind!r}; expected 'fourier' or 'ellipse'")


def curve_to_spec(curve):
    """Fourier spec of a curve; zero coefficients are omitted."""
    cos = {str(k): c for k, c in zip(range(2, curve.k_max + 1), curve.cos_coeffs) if c != 0.0}
    sin = {str(k): s for k, s in zip(range(2, curve.k_max + 1), curve.sin_coeffs) if s != 0.0}
    return {
        "type": "fourier",
        "a0": curve.a0,
        "cos": cos,
        "sin": sin,
        "symmetric": curve.symmetric,
        "k_max": curve.k_max,
    }


def load_curve(path, k_max=None, tol=DEFAULT_PROJECTION_TOL):
    """Read a curve spec file. A report holding a "normalized_curve" entry is accepted too."""
    with open(path, "r", encoding="utf-8") as handle:
        spec = json.load(handle)
    if "type" not in spec and "normalized_curve" in spec:
        spec = spec["normalized_curve"]
    curve = curve_from_spec(spec, k_max=k_max, tol=tol)
    logger.info(f"Loaded {spec.get('type')} curve from {path} (K_max={curve.k_max})")
    return curve
