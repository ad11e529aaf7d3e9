import logging
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from scipy.special import roots_legendre

from .errors import BracketFailure, NoConvergence

logger = logging.getLogger(__name__)

# relative step below which Newton has reached the roundoff floor
_STALL = 4.0 * np.finfo(float).eps


@lru_cache(maxsize=32)
def gauss_legendre(n):
    """Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1]."""
    nodes, weights = roots_legendre(int(n))
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def gauss_legendre_on(lo, hi, n):
    """
    Map the n-point rule onto [lo, hi]. `lo` and `hi` may be arrays of equal
    shape S; the result then has shape S + (n,), one panel per entry.
    """
    x, w = gauss_legendre(n)
    lo = np.asarray(lo, dtype=float)[..., None]
    hi = np.asarray(hi, dtype=float)[..., None]
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def periodic_trapezoid(n, period=2.0 * np.pi, start=0.0):
    """Equispaced nodes of the periodic trapezoid rule and its (uniform) weight."""
    nodes = start + period * np.arange(n) / n
    return nodes, period / n


def periodic_integral(values, period=2.0 * np.pi):
    """Periodic trapezoid rule on samples taken at `periodic_trapezoid` nodes (last axis)."""
    values = np.asarray(values, dtype=float)
    return values.sum(axis=-1) * (period / values.shape[-1])


def safeguarded_newton(fdf, lo, hi, tol, max_iter=100, bisect_width=1e-3):
    """
    Find the root of a function bracketed by [lo, hi].

    `fdf(x)` returns (f(x), f'(x)). Bisection first shrinks the bracket to
    `bisect_width`, then Newton steps take over; any step leaving the bracket
    is replaced by a bisection step. Once |f| <= tol one more Newton step
    polishes the root. A step smaller than a few ulps ends the search too:
    the residual is then at the roundoff floor of `fdf`.

    Returns (root, residual, iterations).
    Raises BracketFailure when f(lo) and f(hi) do not have opposite signs
    and NoConvergence after `max_iter` safeguarded steps.
    """
    f_lo, _ = fdf(lo)
    f_hi, _ = fdf(hi)
    if f_lo == 0.0:
        return lo, 0.0, 0
    if f_hi == 0.0:
        return hi, 0.0, 0
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise BracketFailure(
            f"Root is not bracketed on [{lo:.17g}, {hi:.17g}]",
            lo=lo, hi=hi, f_lo=f_lo, f_hi=f_hi,
        )

    # Orient so that f(xl) < 0 < f(xh).
    xl, xh = (lo, hi) if f_lo < 0.0 else (hi, lo)
    iterations = 0
    while abs(xh - xl) > bisect_width:
        mid = 0.5 * (xl + xh)
        f_mid, _ = fdf(mid)
        iterations += 1
        if f_mid == 0.0:
            return mid, 0.0, iterations
        if f_mid < 0.0:
            xl = mid
        else:
            xh = mid

    x = 0.5 * (xl + xh)
    fx, dfx = fdf(x)
    polishing = False
    for _ in range(max_iter):
        iterations += 1
        low, high = min(xl, xh), max(xl, xh)
        x_new = x - fx / dfx if dfx != 0.0 else np.nan
        if not (low <= x_new <= high):
            x_new = 0.5 * (xl + xh)
        f_new, df_new = fdf(x_new)

        stalled = abs(x_new - x) <= _STALL * max(1.0, abs(x))
        if polishing or stalled:
            # keep whichever of the last two iterates has the smaller residual
            if abs(f_new) <= abs(fx):
                return x_new, abs(f_new), iterations
            return x, abs(fx), iterations

        x, fx, dfx = x_new, f_new, df_new
        if fx == 0.0:
            return x, 0.0, iterations
        if fx < 0.0:
            xl = x
        else:
            xh = x
        if abs(fx) <= tol:
            polishing = True

    if polishing:
        return x, abs(fx), iterations
    raise NoConvergence(
        f"Safeguarded Newton did not reach |f| <= {tol:g} in {max_iter} steps",
        last_x=x, last_residual=fx, iterations=iterations,
    )


def parallel_map(fn, items, jobs=1):
    """
    Ordered map over `items`, using up to `jobs` worker threads.
    The result order never depends on `jobs`.
    """
    items = list(items)
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=int(jobs)) as pool:
        return list(pool.map(fn, items))
