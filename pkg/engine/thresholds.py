"""Threshold searches and parameter optimization.

The searches look for the smallest mean separation lambda at which a
condition starts to hold: a scan over (0, span] locates the first feasible
grid point, bisection narrows the bracket and, for smooth conditions, a few
secant (Newton) steps polish the root.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy import optimize
from scipy.stats import norm

import config
from engine.bounds import (
    SQRT2, BoundsError, PreconditionFailed, UnsupportedSetting, bound_small_n_delta,
    bound_small_n_weight, conditions_large_n_delta, conditions_large_n_weight,
    events_small_n_delta, incomparability_bound, small_n_delta_slack,
)
from engine.measure import measure
from engine.mixture import line_spec, mean_density_1d, pair_spec, triangle_spec
from engine.regions import Complement, Halfspace, VoronoiCell, ball_around_mean

logger = logging.getLogger(__name__)

CONDITIONS = {
    'two-thirds': 2.0 / 3.0,
    'root-two-thirds': SQRT2 / 3.0,
}
LARGE_N = 'large-n'
SMALL_N = 'small-n'


class NotFoundError(ValueError):
    """Raised when no parameter in the search range satisfies the condition."""


# -- one-dimensional density minimum --------------------------------------------

def _density_slope(spec, x):
    comps = norm.pdf(x, loc=spec.means[:, 0], scale=spec.stddevs)
    return float(spec.ratios @ (comps * (spec.means[:, 0] - x) / spec.stddevs ** 2))


def argmin_mean_density_1d(spec, a, b):
    """Global minimizer of f-bar on [a, b].

    A grid scan picks the basin; the minimum inside it is the root of f-bar',
    which brentq resolves far below the resolution of comparing f-bar values.
    No plain golden-section step: bounded Brent (golden section with parabolic
    steps) runs only when f-bar' keeps its sign across the basin.
    """
    if spec.dimension != 1:
        raise UnsupportedSetting("argmin of the mean density is one-dimensional")
    if not a < b:
        raise BoundsError(f"Empty search interval [{a}, {b}]")
    cfg = config.current()
    xs = np.linspace(a, b, cfg.DENSITY_SCAN_POINTS)
    i = int(np.argmin(mean_density_1d(spec, xs)))
    if i == 0 or i == len(xs) - 1:
        return float(xs[i])
    lo, hi = float(xs[i - 1]), float(xs[i + 1])
    if _density_slope(spec, lo) < 0 < _density_slope(spec, hi):
        return optimize.brentq(lambda x: _density_slope(spec, x), lo, hi,
                               xtol=cfg.ARGMIN_TOLERANCE * 1e-2)
    result = optimize.minimize_scalar(lambda x: float(mean_density_1d(spec, [x])[0]),
                                      bounds=(lo, hi), method='bounded',
                                      options={'xatol': cfg.ARGMIN_TOLERANCE})
    return float(result.x)


def midpoint_cut(spec, k1=0, k2=1):
    """Halfspace through the mean-density minimum between two means (oriented towards k1)."""
    lo, hi = spec.means[k1], spec.means[k2]
    gap = hi - lo
    length = float(np.linalg.norm(gap))
    axis = gap / length
    if spec.dimension == 1:
        c = argmin_mean_density_1d(spec, min(lo[0], hi[0]), max(lo[0], hi[0]))
        return Halfspace((1.0,), c) if axis[0] > 0 else Complement(Halfspace((1.0,), c))
    # mixtures laid out along one line: the profile along the axis is a 1D mixture
    profile = line_spec(length, 1, spec.components[k1].ratio / (
        spec.components[k1].ratio + spec.components[k2].ratio),
        spec.stddevs[k2] / spec.stddevs[k1], spec.stddevs[k1])
    t = argmin_mean_density_1d(profile, 0.0, length)
    return Halfspace(tuple(axis), float(axis @ lo) + t)


# -- generic lambda search ----------------------------------------------------

def min_separable_lambda(slack, span, lo=0.0, scan_points=None, tolerance=None, polish=False):
    """Smallest lambda in (lo, span] with slack(lambda) > 0.

    ``slack`` must be negative below the threshold and positive above it;
    the scan returns the first sign change.
    """
    cfg = config.current()
    scan_points = scan_points or cfg.LAMBDA_SCAN_POINTS
    tolerance = tolerance or cfg.LAMBDA_TOLERANCE
    grid = np.linspace(lo, span, scan_points + 1)[1:]
    left = None
    for lam in grid:
        if slack(float(lam)) > 0:
            right = float(lam)
            break
        left = float(lam)
    else:
        raise NotFoundError(f"Condition never holds on ({lo}, {span}]")
    if left is None:
        logger.info("Condition already holds at the first grid point %.6g", right)
        return right

    root = optimize.bisect(slack, left, right, xtol=tolerance)
    logger.debug("Bisection bracket [%.6g, %.6g] -> %.8g", left, right, root)
    if polish and cfg.NEWTON_POLISH_STEPS:
        polished = optimize.newton(slack, root, maxiter=cfg.NEWTON_POLISH_STEPS,
                                   tol=tolerance * 1e-4, disp=False)
        if abs(polished - root) <= tolerance:
            root = float(polished)
    return float(root)


def _span(*sigmas):
    return config.current().LAMBDA_SPAN * max(sigmas)


def min_separable_lambda_1d(r, alpha, condition='two-thirds', sigma=1.0):
    """Smallest lambda with coeff * min(fbar(0), fbar(lambda)) > fbar(c), c the density minimum."""
    if condition not in CONDITIONS:
        raise BoundsError(f"Unknown condition '{condition}'. Must be one of {tuple(CONDITIONS)}")
    if not 0 < r < 1 or not alpha > 0:
        raise BoundsError(f"Need 0 < r < 1 and alpha > 0, got r={r}, alpha={alpha}")
    coeff = CONDITIONS[condition]

    def slack(lam):
        spec = pair_spec(r, alpha, lam, sigma)
        ends = mean_density_1d(spec, [0.0, lam])
        c = argmin_mean_density_1d(spec, 0.0, lam)
        return coeff * float(ends.min()) - float(mean_density_1d(spec, [c])[0])

    lam = min_separable_lambda(slack, _span(sigma, alpha * sigma), polish=True)
    logger.info("r=%s alpha=%s %s: lambda* = %.6f", r, alpha, condition, lam)
    return lam


# -- kernel graphs ------------------------------------------------------------

def best_kernel_width(spec, k, cut):
    """Delta maximizing the kernel order slack; the cut energy does not depend on Delta."""
    sigma = spec.common_stddev()
    if sigma is None:
        raise UnsupportedSetting("Kernel-graph conditions need equal standard deviations")

    def score(width):
        nu_b = measure(spec, ball_around_mean(spec, k, width)).value
        return -math.exp(-width ** 2 / (2 * sigma ** 2)) * nu_b * nu_b

    widths = np.linspace(0.05, 6.0, 60) * sigma
    i = int(np.argmin([score(w) for w in widths]))
    lo, hi = widths[max(i - 1, 0)], widths[min(i + 1, len(widths) - 1)]
    result = optimize.minimize_scalar(score, bounds=(lo, hi), method='bounded',
                                      options={'xatol': 1e-8})
    return float(result.x)


def _pair_events(spec, cut):
    return ((0, cut), (1, Complement(cut)))


def kernel_slack(spec, cut, width=None):
    """min over both tangles of the kernel condition slack, each at its best Delta."""
    slacks = []
    for k, region in _pair_events(spec, cut):
        w = best_kernel_width(spec, k, region) if width is None else width
        slacks.append(conditions_large_n_weight(spec, k, w, region).slack)
    return min(slacks)


def min_separable_lambda_kernel_1d(r=0.5, sigma=1.0):
    """Smallest lambda for which some Delta satisfies the kernel large-n conditions."""
    def slack(lam):
        spec = pair_spec(r, 1.0, lam, sigma)
        return kernel_slack(spec, midpoint_cut(spec))

    lam = min_separable_lambda(slack, _span(sigma), scan_points=80)
    logger.info("Kernel graph, r=%s: lambda* = %.6f", r, lam)
    return lam


def min_separable_lambda_kernel_width(r, width, sigma=1.0):
    """Smallest lambda satisfying the kernel large-n conditions at a fixed Delta."""
    def slack(lam):
        spec = pair_spec(r, 1.0, lam, sigma)
        return kernel_slack(spec, midpoint_cut(spec), width=width)

    return min_separable_lambda(slack, _span(sigma), scan_points=80)


# -- delta graphs in higher dimension ----------------------------------------------

def _maximize_over_radius(score, hi, lo=None, points=12):
    """Largest score over delta in (lo, hi]; infeasible radii score -inf."""
    lo = hi / (4 * points) if lo is None else lo
    grid = np.linspace(lo, hi, points)
    values = np.array([score(float(d)) for d in grid])
    i = int(np.argmax(values))
    if not np.isfinite(values[i]):
        return -math.inf, None
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]

    def objective(d):
        value = score(d)
        return -value if np.isfinite(value) else 1e3

    result = optimize.minimize_scalar(objective, bounds=(a, b), method='bounded',
                                      options={'xatol': (hi - lo) * 1e-4})
    if -result.fun > values[i]:
        return -float(result.fun), float(result.x)
    return float(values[i]), float(grid[i])


def _guarded(func):
    def wrapper(*args):
        try:
            return func(*args)
        except (PreconditionFailed, UnsupportedSetting):
            return -math.inf
    return wrapper


def large_n_delta_slack(spec, events, delta):
    return min(conditions_large_n_delta(spec, k, delta, cut).slack for k, cut in events)


def min_separable_lambda_voronoi(dimension=2, sigma=1.0, span=None):
    """Smallest triangle side for which Voronoi cuts satisfy the delta large-n conditions.

    The three means are an equilateral triangle, so the event of component 0
    against its own cell stands in for all six ordered events.
    """
    def slack(lam):
        spec = triangle_spec(lam, dimension, sigma)
        cell = VoronoiCell(0, tuple(tuple(row) for row in spec.means))
        best, delta = _maximize_over_radius(
            _guarded(lambda d: large_n_delta_slack(spec, [(0, cell)], d)), hi=lam, points=8)
        logger.debug("lambda=%.4f: best slack %.4g at delta=%s", lam, best, delta)
        return best

    lam = min_separable_lambda(slack, span or 10.0 * sigma, lo=sigma, scan_points=18,
                               tolerance=1e-3)
    logger.info("Voronoi cuts, d=%d: lambda* = %.4f", dimension, lam)
    return lam


def min_separable_lambda_dimension(dimension, theorem=LARGE_N, sigma=1.0, span=None):
    """Smallest lambda for two means along e_1 and the halfspace cut at lambda/2."""
    if theorem not in (LARGE_N, SMALL_N):
        raise BoundsError(f"theorem must be '{LARGE_N}' or '{SMALL_N}', got {theorem!r}")

    def slack(lam):
        spec = line_spec(lam, dimension, 0.5, 1.0, sigma)
        axis = (1.0,) + (0.0,) * (dimension - 1)
        cut = Halfspace(axis, lam / 2)
        events = _pair_events(spec, cut)
        if theorem == LARGE_N:
            score = _guarded(lambda d: large_n_delta_slack(spec, events, d))
        else:
            score = _guarded(lambda d: min(small_n_delta_slack(spec, k, d, s) for k, s in events))
        return _maximize_over_radius(score, hi=lam)[0]

    lam = min_separable_lambda(slack, span or _span(sigma), scan_points=60, tolerance=1e-3)
    logger.info("Halfspace cut, d=%d, %s: lambda* = %.4f", dimension, theorem, lam)
    return lam


# -- bound maximization ----------------------------------------------------------

def default_radius_grid(spec, hi=None):
    cfg = config.current()
    sigma = float(spec.stddevs.max())
    hi = hi or 4.0 * sigma
    return np.linspace(hi / cfg.RADIUS_GRID_POINTS, hi, cfg.RADIUS_GRID_POINTS)


def _map(func, items, threads):
    threads = threads or config.current().THREADS
    if threads <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def maximize(evaluate, grid, threads=None):
    """Maximize evaluate(p) -> (score, payload) over a grid, then refine locally.

    Parameters whose evaluation raises a BoundsError score -inf.
    Ties go to the smallest parameter.
    """
    grid = sorted({float(p) for p in grid})
    if not grid:
        raise BoundsError("Empty parameter grid")

    def safe(p):
        try:
            return evaluate(p)
        except BoundsError as exc:
            logger.debug("Parameter %.6g infeasible: %s", p, exc)
            return -math.inf, None

    results = _map(safe, grid, threads)
    scores = np.array([score for score, _ in results])
    i = int(np.argmax(scores))
    if not np.isfinite(scores[i]):
        raise NotFoundError(f"No feasible parameter among {len(grid)} grid points")
    best = (grid[i], *results[i])
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    if a < b:
        def objective(p):
            score = safe(p)[0]
            return -score if np.isfinite(score) else 2.0

        tolerance = config.current().LAMBDA_TOLERANCE * (b - a)
        found = optimize.minimize_scalar(objective, bounds=(a, b), method='bounded',
                                         options={'xatol': tolerance})
        score, payload = safe(float(found.x))
        if score > best[1]:
            best = (float(found.x), score, payload)
    logger.debug("Best parameter %.6g with score %.6g", best[0], best[1])
    return best[0], best[2]


def threshold_of(cut):
    if isinstance(cut, Halfspace) and cut.dimension == 1 and cut.normal[0] > 0:
        return cut.offset, 'left'
    if isinstance(cut, Complement) and isinstance(cut.inner, Halfspace) and cut.dimension == 1:
        return cut.inner.offset, 'right'
    raise UnsupportedSetting("Kernel bounds need a threshold cut (-inf, c] or (c, inf)")


def optimize_radius(spec, labeling, k, cut, model='delta', grid=None, threads=None):
    """Best delta (or Delta) for the finite-n bound of tangle k with cut S.

    Returns (parameter, BoundReport).
    """
    if model == 'delta':
        def evaluate(p):
            report = bound_small_n_delta(spec, labeling, k, p, cut)
            return report.raw, report
    elif model == 'kernel':
        c, side = threshold_of(cut)

        def evaluate(p):
            report = bound_small_n_weight(spec, labeling, k, p, c, side)
            return report.raw, report
    else:
        raise BoundsError(f"model must be 'delta' or 'kernel', got {model!r}")
    return maximize(evaluate, default_radius_grid(spec) if grid is None else grid, threads)


def optimize_incomparability_radius(spec, labeling, cuts, grid=None, threads=None):
    """Best common delta for the incomparability bound of a cut family.

    Returns (delta, bound, per-event reports).
    """
    def evaluate(p):
        reports = events_small_n_delta(spec, labeling, cuts, p)
        raw = 1.0 - sum(1.0 - report.raw for report in reports.values())
        return raw, reports

    delta, reports = maximize(evaluate, default_radius_grid(spec) if grid is None else grid,
                              threads)
    return delta, incomparability_bound(reports, cuts), reports
