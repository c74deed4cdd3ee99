"""Gaussian measures of regions and cut energies.

``measure`` returns nu_k(A) or the mean measure; ``cut_energy`` returns the
double integral of w(x, y) f(x) f(y) over S x S^c. Closed forms and
one-dimensional quadrature are used where the geometry allows it, randomized
quasi-Monte Carlo otherwise.
"""

import logging
import math
from functools import lru_cache

import numpy as np
from scipy import integrate
from scipy.special import gammaln, ndtr, ndtri
from scipy.stats import chi2, ncx2, qmc

import config
from engine.mixture import MEAN, component_densities
from engine.regions import (
    Ball, Box, BoundaryZone, Complement, Halfspace, Intersection, RegionError,
    complement_intervals, contained_in, disjoint, intervals_1d,
)
from models import DeltaNeighborhood, GaussianKernel, MeasureResult

logger = logging.getLogger(__name__)

CLOSED_FORM = 'closed-form'
QUADRATURE = 'quadrature'
QMC = 'quasi-monte-carlo'

_METHOD_RANK = {CLOSED_FORM: 0, QUADRATURE: 1, QMC: 2}
_TAIL_WIDTH = 13.0


class NonConvergenceError(RuntimeError):
    """Raised when adaptive quadrature does not reach its tolerance."""


def _quad(func, a, b, points=None):
    cfg = config.current()
    kwargs = {'epsabs': cfg.QUAD_TOLERANCE * 1e-3, 'epsrel': 1e-10,
              'limit': cfg.QUAD_LIMIT, 'full_output': 1}
    if points is not None and math.isfinite(a) and math.isfinite(b):
        inside = sorted(p for p in points if a < p < b)
        if inside:
            kwargs['points'] = inside
    result = integrate.quad(func, a, b, **kwargs)
    value, abserr = result[0], result[1]
    if len(result) > 3 and abserr > cfg.QUAD_TOLERANCE:
        raise NonConvergenceError(
            f"Quadrature on [{a}, {b}] stopped at error {abserr:.3g}: {result[3]}"
        )
    return value, abserr


def _combine(results, weights):
    value = sum(w * r.value for w, r in zip(weights, results))
    error = sum(w * r.error for w, r in zip(weights, results))
    method = max((r.method for r in results), key=_METHOD_RANK.get)
    return MeasureResult(value=value, method=method, error=error,
                         lower_bound=any(r.lower_bound for r in results))


def measure(spec, region, which=MEAN):
    """nu_k(region) for a component index, or the mean measure for ``MEAN``."""
    if region.dimension != spec.dimension:
        raise RegionError(
            f"Region dimension {region.dimension} does not match mixture dimension {spec.dimension}"
        )
    if which == MEAN:
        parts = [component_measure(spec, region, k) for k in range(spec.m)]
        return _combine(parts, spec.ratios)
    if not 0 <= which < spec.m:
        raise RegionError(f"Invalid component index {which}")
    return component_measure(spec, region, which)


def component_measure(spec, region, k):
    cfg = config.current()
    budget = (cfg.QMC_POINTS, cfg.QMC_REPLICATES, cfg.QMC_SEED, cfg.QUAD_TOLERANCE)
    comp = spec.components[k]
    return _component_measure(region, comp.mean, comp.stddev, budget)


@lru_cache(maxsize=8192)
def _component_measure(region, mean, sigma, budget):
    mu = np.array(mean)
    closed = _closed_form(region, mu, sigma, budget)
    if closed is not None:
        return closed
    return _qmc_measure(region, mu, sigma)


def _interval_mass(intervals, mu, sigma):
    return sum(ndtr((hi - mu) / sigma) - ndtr((lo - mu) / sigma) for lo, hi in intervals)


def _parallel_profile(region, axis=None):
    """Rewrite a region built from parallel halfspaces as a 1D region along its normal."""
    if isinstance(region, Halfspace):
        normal = np.array(region.normal)
        if axis is None:
            axis = normal
        sign = float(normal @ axis)
        if abs(abs(sign) - 1.0) > 1e-12:
            return None, None
        return Halfspace((math.copysign(1.0, sign),), region.offset, open=region.open), axis
    if isinstance(region, Complement):
        inner, axis = _parallel_profile(region.inner, axis)
        return (None, None) if inner is None else (Complement(inner), axis)
    if isinstance(region, Intersection):
        left, axis = _parallel_profile(region.left, axis)
        if left is None:
            return None, None
        right, axis = _parallel_profile(region.right, axis)
        return (None, None) if right is None else (Intersection(left, right), axis)
    return None, None


def _nested_in(small, big):
    if isinstance(small, Box) and isinstance(big, Box) and small.frame == big.frame:
        return all(a >= b for a, b in zip(small.lo, big.lo)) and all(
            a <= b for a, b in zip(small.hi, big.hi))
    if isinstance(small, Ball) and isinstance(big, Ball):
        gap = np.linalg.norm(np.array(small.center) - np.array(big.center))
        return gap + small.radius <= big.radius
    return False


def _closed_form(region, mu, sigma, budget):
    d = len(mu)
    if d == 1 and not isinstance(region, BoundaryZone):
        return MeasureResult(_interval_mass(intervals_1d(region), mu[0], sigma), CLOSED_FORM)
    if isinstance(region, Halfspace):
        return MeasureResult(ndtr((region.offset - mu @ np.array(region.normal)) / sigma), CLOSED_FORM)
    if isinstance(region, Box):
        local = mu if region.frame is None else np.array(region.frame) @ mu
        lo, hi = np.array(region.lo), np.array(region.hi)
        value = np.prod(ndtr((hi - local) / sigma) - ndtr((lo - local) / sigma))
        return MeasureResult(value, CLOSED_FORM)
    if isinstance(region, Ball):
        return _ball_measure(region, mu, sigma)
    profile, axis = _parallel_profile(region)
    if profile is not None:
        return MeasureResult(_interval_mass(intervals_1d(profile), mu @ axis, sigma), CLOSED_FORM)
    if isinstance(region, Complement):
        inner = _component_measure(region.inner, tuple(mu), sigma, budget)
        if inner.lower_bound:
            return None
        return MeasureResult(1.0 - inner.value, inner.method, inner.error)
    if isinstance(region, Intersection):
        left, right = region.left, region.right
        if disjoint(left, right):
            return MeasureResult(0.0, CLOSED_FORM)
        for a, b in ((left, right), (right, left)):
            if contained_in(a, b) is True:
                return _component_measure(a, tuple(mu), sigma, budget)
        for a, b in ((left, right), (right, left)):
            if isinstance(b, Complement) and _nested_in(b.inner, a):
                outer = _component_measure(a, tuple(mu), sigma, budget)
                hole = _component_measure(b.inner, tuple(mu), sigma, budget)
                if not (outer.lower_bound or hole.lower_bound):
                    return MeasureResult(outer.value - hole.value,
                                         max(outer.method, hole.method, key=_METHOD_RANK.get),
                                         outer.error + hole.error)
    return None


def _ball_measure(ball, mu, sigma):
    """Gaussian measure of a ball: axis quadrature in d = 2, 3; inscribed cube for d >= 4."""
    d = len(mu)
    r = ball.radius
    if r == 0:
        return MeasureResult(0.0, CLOSED_FORM)
    if d >= 4:
        half = r / math.sqrt(d)
        center = np.array(ball.center)
        value = np.prod(ndtr((center + half - mu) / sigma) - ndtr((center - half - mu) / sigma))
        return MeasureResult(value, CLOSED_FORM, lower_bound=True)
    # Rotate so the Gaussian mean lies on the first axis of the ball's frame
    a = float(np.linalg.norm(mu - np.array(ball.center)))

    def section(t):
        h2 = max(r * r - t * t, 0.0)
        weight = math.exp(-0.5 * ((t - a) / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
        if d == 2:
            h = math.sqrt(h2) / sigma
            return weight * (ndtr(h) - ndtr(-h))
        return weight * -math.expm1(-h2 / (2 * sigma * sigma))

    value, error = _quad(section, -r, r, points=[a])
    return MeasureResult(value, QUADRATURE, error)


# -- quasi-Monte Carlo machinery -----------------------------------------------

def _qmc_layout():
    cfg = config.current()
    per_replicate = max(cfg.QMC_POINTS // cfg.QMC_REPLICATES, 2)
    return int(math.floor(math.log2(per_replicate))), cfg.QMC_REPLICATES, cfg.QMC_SEED


@lru_cache(maxsize=48)
def _sobol_uniforms(dimension, log2_points, replicate, seed):
    rng = np.random.default_rng([seed, dimension, replicate])
    sampler = qmc.Sobol(d=dimension, scramble=True, seed=rng)
    points = sampler.random_base2(m=log2_points)
    # scrambled Sobol points never sit on 0 or 1, but clip for ndtri anyway
    points = np.clip(points, 1e-16, 1 - 1e-16)
    points.setflags(write=False)
    return points


def _replicates(dimension):
    log2_points, replicates, seed = _qmc_layout()
    for j in range(replicates):
        yield _sobol_uniforms(dimension, log2_points, j, seed)


def _summarize(estimates):
    estimates = np.asarray(estimates)
    error = estimates.std(ddof=1) / math.sqrt(len(estimates)) if len(estimates) > 1 else 0.0
    return float(estimates.mean()), float(error)


def _qmc_measure(region, mu, sigma):
    d = len(mu)
    estimates = []
    for u in _replicates(d):
        x = mu + sigma * ndtri(u)
        estimates.append(region.mask(x).mean())
    value, error = _summarize(estimates)
    logger.debug("QMC measure of %s: %.6g +/- %.2g", type(region).__name__, value, error)
    return MeasureResult(value, QMC, error)


def qmc_measure(spec, region, which=MEAN):
    """Force the QMC path (used to cross-check closed forms)."""
    if which == MEAN:
        parts = [_qmc_measure(region, np.array(c.mean), c.stddev) for c in spec.components]
        return _combine(parts, spec.ratios)
    comp = spec.components[which]
    return _qmc_measure(region, np.array(comp.mean), comp.stddev)


# -- cut energies ------------------------------------------------------------

def _pair_density(a_j, s_j, a_l, s_l, h):
    """Coefficient and conditional law of t when t ~ N(a_j, s_j) and t + h ~ N(a_l, s_l)."""
    v = s_j * s_j + s_l * s_l
    shift = a_l - h
    coeff = math.exp(-0.5 * (a_j - shift) ** 2 / v) / math.sqrt(2 * math.pi * v)
    mean = (a_j * s_l * s_l + shift * s_j * s_j) / v
    std = s_j * s_l / math.sqrt(v)
    return coeff, mean, std


def _crossing_mass(inside, outside, a_j, s_j, a_l, s_l, h):
    """Density of pairs (t, t + h) with t in S and t + h in S^c along one axis."""
    coeff, mean, std = _pair_density(a_j, s_j, a_l, s_l, h)
    if coeff == 0.0:
        return 0.0
    total = 0.0
    for lo, hi in inside:
        for p, q in outside:
            a, b = max(lo, p - h), min(hi, q - h)
            if a < b:
                total += ndtr((b - mean) / std) - ndtr((a - mean) / std)
    return coeff * total


def _kinks(inside, outside):
    """Values of h where the overlap of [lo, hi] and [p - h, q - h] changes shape."""
    kinks = set()
    for lo, hi in inside:
        for p, q in outside:
            kinks.update((p - lo, q - hi, q - lo, p - hi))
    return {k for k in kinks if math.isfinite(k)}


def _axis_energy(inside, weight, a_j, s_j, a_l, s_l, perp_sq, extra_dims):
    """Pair energy for a cut that only depends on one coordinate.

    The orthogonal coordinates contribute exactly: a (non)central chi-square
    CDF for the delta kernel, a Gaussian factor for the kernel graph.
    """
    outside = complement_intervals(inside)
    if not inside or not outside:
        return 0.0, 0.0
    v = s_j * s_j + s_l * s_l
    breaks = sorted(_kinks(inside, outside))
    if isinstance(weight, DeltaNeighborhood):
        delta = weight.delta
        if extra_dims == 0:
            def orthogonal(h):
                return 1.0
        elif perp_sq == 0.0:
            def orthogonal(h):
                return chi2.cdf((delta * delta - h * h) / v, extra_dims)
        else:
            def orthogonal(h):
                return ncx2.cdf((delta * delta - h * h) / v, extra_dims, perp_sq / v)

        def integrand(h):
            return orthogonal(h) * _crossing_mass(inside, outside, a_j, s_j, a_l, s_l, h)

        return _quad(integrand, -delta, delta, points=breaks + [0.0])
    c2 = weight.bandwidth ** 2
    factor = (c2 / (c2 + v)) ** (extra_dims / 2) * math.exp(-perp_sq / (2 * (c2 + v)))
    reach = _TAIL_WIDTH * weight.bandwidth

    def integrand(h):
        return math.exp(-h * h / (2 * c2)) * _crossing_mass(inside, outside, a_j, s_j, a_l, s_l, h)

    value, error = _quad(integrand, -reach, reach, points=breaks)
    return factor * value, factor * error


def _axis_form(spec, region):
    """(axis, inside intervals) when the cut only depends on one coordinate, else None."""
    if spec.dimension == 1 and not isinstance(region, BoundaryZone):
        return np.array([1.0]), intervals_1d(region)
    profile, axis = _parallel_profile(region)
    if profile is None:
        return None
    return axis, intervals_1d(profile)


def pair_cut_energy(spec, region, weight, j, l):
    """Integral over S x S^c of w(x, y) f_j(x) f_l(y)."""
    cfg = config.current()
    budget = (cfg.QMC_POINTS, cfg.QMC_REPLICATES, cfg.QMC_SEED, cfg.QUAD_TOLERANCE)
    return _pair_cut_energy(spec, region, weight, j, l, budget)


@lru_cache(maxsize=4096)
def _pair_cut_energy(spec, region, weight, j, l, budget):
    form = _axis_form(spec, region)
    if form is None:
        value, error = _qmc_energy(spec, region, weight, [j], [l], np.ones((1, 1)))
        return MeasureResult(value, QMC, error)
    axis, inside = form
    mu_j, mu_l = spec.means[j], spec.means[l]
    s_j, s_l = spec.stddevs[j], spec.stddevs[l]
    gap = mu_l - mu_j
    perp = gap - (gap @ axis) * axis
    value, error = _axis_energy(inside, weight, float(mu_j @ axis), s_j, float(mu_l @ axis), s_l,
                                float(perp @ perp), spec.dimension - 1)
    return MeasureResult(value, QUADRATURE, error)


def cut_energy(spec, region, weight):
    """Integral over S x S^c of w(x, y) fbar(x) fbar(y); symmetric in S and S^c."""
    if region.dimension != spec.dimension:
        raise RegionError("Cut region and mixture have different dimensions")
    if _axis_form(spec, region) is None:
        cfg = config.current()
        budget = (cfg.QMC_POINTS, cfg.QMC_REPLICATES, cfg.QMC_SEED, cfg.QUAD_TOLERANCE)
        return _mean_qmc_energy(spec, region, weight, budget)
    ratios = spec.ratios
    results, weights = [], []
    for j in range(spec.m):
        for l in range(spec.m):
            results.append(pair_cut_energy(spec, region, weight, j, l))
            weights.append(ratios[j] * ratios[l])
    return _combine(results, weights)


@lru_cache(maxsize=1024)
def _mean_qmc_energy(spec, region, weight, budget):
    ratios = spec.ratios
    value, error = _qmc_energy(spec, region, weight, range(spec.m), range(spec.m),
                               np.outer(ratios, ratios))
    return MeasureResult(value, QMC, error)


def _ball_log_volume(d, radius):
    return (d / 2) * math.log(math.pi) + d * math.log(radius) - gammaln(d / 2 + 1)


def _qmc_energy(spec, region, weight, sources, targets, pair_weights):
    """QMC estimate of sum_{j,l} pair_weights[j,l] * E_jl for the listed components."""
    d = spec.dimension
    sources, targets = list(sources), list(targets)
    means, sigmas = spec.means, spec.stddevs
    estimates = []
    if isinstance(weight, DeltaNeighborhood):
        volume = math.exp(_ball_log_volume(d, weight.delta))
        for u in _replicates(2 * d + 1):
            z = ndtri(u[:, :d])
            direction = ndtri(u[:, d:2 * d])
            direction /= np.linalg.norm(direction, axis=1, keepdims=True)
            step = weight.delta * u[:, 2 * d:] ** (1.0 / d) * direction
            total = 0.0
            for a, j in enumerate(sources):
                x = means[j] + sigmas[j] * z
                y = x + step
                crossing = region.mask(x) & ~region.mask(y)
                if not crossing.any():
                    continue
                dens = component_densities(spec, y[crossing])[:, targets] @ pair_weights[a]
                total += volume * dens.sum() / len(z)
            estimates.append(total)
    elif isinstance(weight, GaussianKernel):
        c2 = weight.bandwidth ** 2
        for u in _replicates(2 * d):
            z1, z2 = ndtri(u[:, :d]), ndtri(u[:, d:])
            total = 0.0
            for a, j in enumerate(sources):
                x = means[j] + sigmas[j] * z1
                in_x = region.mask(x)
                for b, l in enumerate(targets):
                    if pair_weights[a, b] == 0:
                        continue
                    y = means[l] + sigmas[l] * z2
                    crossing = in_x & ~region.mask(y)
                    sq = ((x[crossing] - y[crossing]) ** 2).sum(axis=1)
                    total += pair_weights[a, b] * np.exp(-sq / (2 * c2)).sum() / len(z1)
            estimates.append(total)
    else:
        raise TypeError(f"Unknown weight model {weight!r}")
    value, error = _summarize(estimates)
    logger.debug("QMC cut energy of %s: %.6g +/- %.2g", type(region).__name__, value, error)
    return value, error

