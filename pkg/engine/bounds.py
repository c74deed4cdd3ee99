"""Theorem preconditions, moment formulas and lower bounds.

Every bound is returned as a BoundReport. The un-clamped value is kept in
``raw`` so that vacuous (negative) bounds stay visible in reports; only
``combined`` is clamped to [0, 1].
"""

import logging
import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import ndtr

import config
from engine.measure import cut_energy, measure, pair_cut_energy
from engine.regions import (
    Box, Complement, Halfspace, Intersection, Interval, VoronoiCell, ball_around_mean,
    boundary_zone, complement, contained_in,
)
from models import (
    BoundReport, ConditionPair, DeltaNeighborhood, GaussianKernel, PreconditionResult,
)

logger = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
ORDER_COEFFICIENT = 2.0 / 9.0
HOEFFDING_RANGE = 2 * SQRT2 + 3


class BoundsError(ValueError):
    """Base class for errors raised while evaluating bounds."""


class PreconditionFailed(BoundsError):
    """A theorem precondition does not hold; carries its name and slack."""

    def __init__(self, name, slack, detail=''):
        self.name = name
        self.slack = slack
        message = f"Precondition '{name}' fails (slack {slack:.6g})"
        super().__init__(f"{message}: {detail}" if detail else message)


class UnsupportedSetting(BoundsError):
    """The inputs fall outside the setting a theorem covers."""


class MissingEventError(KeyError):
    """An ordered pair event has no bound report."""


# -- elementary quantities ------------------------------------------------------

def _component_measures(spec, region):
    return np.array([measure(spec, region, k).value for k in range(spec.m)])


def size_tail(nus, counts):
    """Pr(|V_A| >= 2) from per-component measures and counts."""
    nus = np.asarray(nus, dtype=float)
    counts = np.asarray(counts, dtype=float)
    if np.any(nus >= 1.0):
        raise BoundsError("Pr(|V_A| >= 2) needs nu_k(A) < 1 for every component")
    log_none = float(np.sum(counts * np.log1p(-nus)))
    return 1.0 - (1.0 + float(np.sum(counts * nus / (1.0 - nus)))) * math.exp(log_none)


def size_at_least_two(spec, labeling, region):
    return min(max(size_tail(_component_measures(spec, region), labeling.counts), 0.0), 1.0)


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    second_moment: float
    kappa_mean: float


def moment_formulas(spec, labeling, region, weight, cut):
    """E|V_A|, Var|V_A|, E|V_A|^2 and E kappa(V_S) under the hidden labeling."""
    n = labeling.n
    nus = _component_measures(spec, region)
    counts = np.asarray(labeling.counts, dtype=float)
    mean = float(counts @ nus)
    variance = float(counts @ (nus * (1.0 - nus)))
    energy = cut_energy(spec, cut, weight).value
    ratios = spec.ratios
    same_label = sum(ratios[k] * pair_cut_energy(spec, cut, weight, k, k).value
                     for k in range(spec.m))
    return Moments(mean=mean, variance=variance, second_moment=mean * mean + variance,
                   kappa_mean=n * n * energy - n * same_label)


def order_floor(spec, k, radius, n, epsilon=None, kernel=False):
    """(1 - eps) n^2 (2/9) nu(B)^2, times exp(-Delta^2 / 2 sigma^2) for kernel graphs."""
    if epsilon is None:
        epsilon = config.current().ORDER_FLOOR_EPSILON
    if not 0 <= epsilon <= 1:
        raise BoundsError(f"epsilon must lie in [0, 1], got {epsilon}")
    nu_b = measure(spec, ball_around_mean(spec, k, radius)).value
    floor = (1 - epsilon) * n * n * ORDER_COEFFICIENT * nu_b * nu_b
    if kernel:
        floor *= math.exp(-radius ** 2 / (2 * _common_sigma(spec) ** 2))
    return floor


def _common_sigma(spec):
    sigma = spec.common_stddev()
    if sigma is None:
        raise UnsupportedSetting("Kernel-graph bounds need equal standard deviations")
    return sigma


# -- large-n conditions --------------------------------------------------------

def _majority(spec, ball, cut):
    nu_b = measure(spec, ball).value
    nu_bs = measure(spec, Intersection(ball, cut)).value
    return nu_b, PreconditionResult('majority', nu_bs > 0.5 * nu_b, nu_bs - 0.5 * nu_b)


def conditions_large_n_delta(spec, k, delta, cut):
    """Majority and order conditions for the delta-neighbourhood graph."""
    ball = ball_around_mean(spec, k, delta)
    nu_b, majority = _majority(spec, ball, cut)
    energy = cut_energy(spec, cut, DeltaNeighborhood(delta)).value
    slack = ORDER_COEFFICIENT * nu_b * nu_b - energy
    return ConditionPair(majority=majority, order=PreconditionResult('order', slack > 0, slack))


def conditions_large_n_weight(spec, k, width, cut):
    """Majority and order conditions for the Gaussian-kernel graph with bandwidth sigma."""
    sigma = _common_sigma(spec)
    ball = ball_around_mean(spec, k, width)
    nu_b, majority = _majority(spec, ball, cut)
    energy = cut_energy(spec, cut, GaussianKernel(sigma)).value
    slack = ORDER_COEFFICIENT * math.exp(-width ** 2 / (2 * sigma ** 2)) * nu_b * nu_b - energy
    return ConditionPair(majority=majority, order=PreconditionResult('order', slack > 0, slack))


# -- small-n bounds ----------------------------------------------------------

def _label_moments(nu_a, nu_b, nu_ab):
    """Mean, variance and third absolute central moment of Y = 3*1_A - 2*sqrt(2)*1_B."""
    values = np.array([3.0, -2 * SQRT2, 3.0 - 2 * SQRT2, 0.0])
    masses = np.array([nu_a - nu_ab, nu_b - nu_ab, nu_ab, 0.0])
    masses = np.clip(masses, 0.0, 1.0)
    masses[3] = max(1.0 - masses[:3].sum(), 0.0)
    mean = 3 * nu_a - 2 * SQRT2 * nu_b
    second = 9 * nu_a + 8 * nu_b - 12 * SQRT2 * nu_ab
    variance = max(second - mean * mean, 0.0)
    rho = float(masses @ np.abs(values - mean) ** 3)
    return mean, variance, rho


def berry_esseen_branch(total_mean, total_variance, total_rho):
    if total_variance <= 0:
        return -math.inf
    constant = config.current().BERRY_ESSEEN_CONSTANT
    return float(ndtr(-total_mean / math.sqrt(total_variance))
                 - constant * total_rho / total_variance ** 1.5)


def hoeffding_branch(n, gap, spread):
    return -math.expm1(-n * 2.0 * gap * gap / (spread * spread))


def _check_n(labeling, n):
    if n is not None and n != labeling.n:
        raise BoundsError(f"n = {n} does not match the labeling's n = {labeling.n}")
    return labeling.n


def _report(preconditions, hoeffding, berry_esseen, size_correction, floor, diagnostics):
    raw = max(hoeffding, berry_esseen) - size_correction
    combined = min(max(raw, 0.0), 1.0)
    combined = min(combined, max(hoeffding, berry_esseen))
    return BoundReport(preconditions=tuple(preconditions), hoeffding_branch=hoeffding,
                       berry_esseen_branch=berry_esseen, size_correction=size_correction,
                       raw=raw, combined=combined, order_floor=floor, diagnostics=diagnostics)


def _ball_in_cut(spec, k, delta, cut):
    ball = ball_around_mean(spec, k, delta)
    inside = contained_in(ball, cut)
    if inside is None:
        raise UnsupportedSetting(
            f"Cannot verify that the ball lies in a {type(cut).__name__} cut"
        )
    if not inside:
        raise PreconditionFailed('ball_in_cut', math.nan, 'B is not contained in S')
    return ball


def small_n_delta_slack(spec, k, delta, cut):
    """2*sqrt(2)*nu(B) - 3*nu(A); raises when B is not inside S."""
    ball = _ball_in_cut(spec, k, delta, cut)
    zone = boundary_zone(cut, delta)
    return 2 * SQRT2 * measure(spec, ball).value - 3 * measure(spec, zone).value


def bound_small_n_delta(spec, labeling, k, delta, cut, n=None):
    """Finite-n lower bound for the delta-neighbourhood graph.

    Raises:
        UnsupportedSetting: when B ⊆ S cannot be decided exactly for the shapes.
        PreconditionFailed: when B ⊄ S or 2*sqrt(2)*nu(B) <= 3*nu(A).
    """
    n = _check_n(labeling, n)
    ball = _ball_in_cut(spec, k, delta, cut)
    zone = boundary_zone(cut, delta)
    nu_a = _component_measures(spec, zone)
    nu_b = _component_measures(spec, ball)
    nu_ab = _component_measures(spec, Intersection(zone, ball))
    ratios = spec.ratios
    mean_a, mean_b = float(ratios @ nu_a), float(ratios @ nu_b)

    slack = 2 * SQRT2 * mean_b - 3 * mean_a
    if slack <= 0:
        raise PreconditionFailed('ball_vs_boundary', slack, '2*sqrt(2)*nu(B) <= 3*nu(A)')
    preconditions = [PreconditionResult('ball_in_cut', True, math.nan),
                     PreconditionResult('ball_vs_boundary', True, slack)]

    hoeffding = hoeffding_branch(n, slack, HOEFFDING_RANGE)
    totals = np.zeros(3)
    for count, a, b, ab in zip(labeling.counts, nu_a, nu_b, nu_ab):
        totals += count * np.array(_label_moments(a, b, ab))
    berry_esseen = berry_esseen_branch(*totals)
    size_correction = 1.0 - size_tail(nu_b, labeling.counts)
    floor = order_floor(spec, k, delta, n)
    logger.debug("delta=%.4g nu(A)=%.4g nu(B)=%.4g hoeffding=%.6g berry-esseen=%.6g",
                 delta, mean_a, mean_b, hoeffding, berry_esseen)
    return _report(preconditions, hoeffding, berry_esseen, min(max(size_correction, 0.0), 1.0),
                   floor, {'nu_A': mean_a, 'nu_B': mean_b, 'sum_mean': totals[0],
                           'sum_variance': totals[1], 'sum_rho': totals[2]})


def expected_kernel_decay(mu, c, sigma):
    """E exp(-(X - c)^2 / 2 sigma^2) for X ~ N(mu, sigma^2)."""
    return math.exp(-(mu - c) ** 2 / (4 * sigma ** 2)) / SQRT2


def threshold_cut(c, side='left'):
    """(-inf, c] for side 'left', (c, inf) for side 'right'."""
    left = Halfspace((1.0,), c)
    if side == 'left':
        return left
    if side == 'right':
        return Complement(left)
    raise BoundsError(f"side must be 'left' or 'right', got {side!r}")


def bound_small_n_weight(spec, labeling, k, width, c, side='left', n=None):
    """Finite-n lower bound for the 1D Gaussian-kernel graph (Hoeffding branch only)."""
    n = _check_n(labeling, n)
    if spec.dimension != 1:
        raise UnsupportedSetting("The kernel-graph finite-n bound is one-dimensional")
    sigma = _common_sigma(spec)
    mu = spec.components[k].mean[0]
    interval = Interval(mu - width / 2, mu + width / 2)
    threshold_cut(c, side)  # rejects unknown sides
    if side == 'left':
        margin = c - interval.hi
        inside = margin >= 0
    else:
        margin = interval.lo - c
        inside = margin > 0
    if not inside:
        raise PreconditionFailed('interval_in_cut', margin, 'I is not contained in S')

    clique_weight = SQRT2 / 3 * math.exp(-width ** 2 / (4 * sigma ** 2))
    nu_i = _component_measures(spec, interval)
    mean_i = float(spec.ratios @ nu_i)
    decay = sum(float(r) * expected_kernel_decay(comp.mean[0], c, sigma) / 2
                for r, comp in zip(spec.ratios, spec.components))
    gap = clique_weight * mean_i - decay
    if gap <= 0:
        raise PreconditionFailed('interval_vs_cut_mass', gap,
                                 'clique mass does not dominate the expected cut weight')
    preconditions = [PreconditionResult('interval_in_cut', True, margin),
                     PreconditionResult('interval_vs_cut_mass', True, gap)]
    hoeffding = hoeffding_branch(n, gap, 0.5 + clique_weight)
    size_correction = min(max(1.0 - size_tail(nu_i, labeling.counts), 0.0), 1.0)
    floor = order_floor(spec, k, width, n, kernel=True)
    return _report(preconditions, hoeffding, -math.inf, size_correction, floor,
                   {'nu_I': mean_i, 'expected_decay': decay})


# -- incomparability -------------------------------------------------------------

class CutAssignment:
    """Cuts S_{k1,k2} for unordered pairs with S_{k2,k1} = complement of S_{k1,k2}."""

    def __init__(self, m, cuts):
        self.m = m
        self._cuts = {}
        for (a, b), region in cuts.items():
            if a == b or not (0 <= a < m and 0 <= b < m):
                raise BoundsError(f"Invalid component pair ({a}, {b})")
            key, value = ((a, b), region) if a < b else ((b, a), complement(region))
            self._cuts[key] = value
        missing = [pair for pair in combinations(range(m), 2) if pair not in self._cuts]
        if missing:
            raise BoundsError(f"No cut assigned to component pairs {missing}")

    def get(self, k1, k2):
        if k1 < k2:
            return self._cuts[(k1, k2)]
        return complement(self._cuts[(k2, k1)])

    def pairs(self):
        return list(combinations(range(self.m), 2))

    def events(self):
        """Ordered events (k1, k2): the tangle of k1 contains V of S_{k1,k2}."""
        result = []
        for a, b in self.pairs():
            result.extend([(a, b), (b, a)])
        return result


def voronoi_cuts(spec):
    """S_{k1,k2} = Voronoi cell of mu_{k1} among all means."""
    sites = tuple(tuple(row) for row in spec.means)
    return CutAssignment(spec.m, {pair: VoronoiCell(pair[0], sites)
                                  for pair in combinations(range(spec.m), 2)})


def square_frame(spec, k):
    """Box axes for mu_k, turned so the bisector towards the other means is a diagonal."""
    if spec.dimension != 2:
        raise UnsupportedSetting("Square cuts are defined in the plane")
    others = np.delete(spec.means, k, axis=0)
    heading = others.mean(axis=0) - spec.means[k] if len(others) else np.array([1.0, 1.0])
    angle = math.atan2(heading[1], heading[0]) - math.pi / 4
    return ((math.cos(angle), math.sin(angle)), (-math.sin(angle), math.cos(angle)))


def square_cut(spec, k, half_width):
    frame = square_frame(spec, k)
    center = np.array(frame) @ spec.means[k]
    return Box(center - half_width, center + half_width, frame=frame)


def square_cuts(spec, half_width):
    """S_{k1,k2} = square of the given half-width around mu_{k1}."""
    return CutAssignment(spec.m, {pair: square_cut(spec, pair[0], half_width)
                                  for pair in combinations(range(spec.m), 2)})


def events_small_n_delta(spec, labeling, cuts, delta):
    return {(a, b): bound_small_n_delta(spec, labeling, a, delta, cuts.get(a, b))
            for a, b in cuts.events()}


def events_large_n_delta(spec, cuts, delta):
    return {(a, b): conditions_large_n_delta(spec, a, delta, cuts.get(a, b))
            for a, b in cuts.events()}


def incomparability_bound(reports, cuts):
    """Union bound over both orientations of every pair: 1 - sum(1 - bound)."""
    failure = 0.0
    for event in cuts.events():
        if event not in reports:
            raise MissingEventError(f"No bound for event {event}")
        report = reports[event]
        value = report.combined if isinstance(report, BoundReport) else float(report)
        failure += 1.0 - value
    return min(max(1.0 - failure, 0.0), 1.0)

