"""Tests for Gaussian measures and cut energies."""

import math

import numpy as np
import pytest
from scipy import integrate
from scipy.stats import chi2, norm

from engine.measure import (
    CLOSED_FORM, QMC, QUADRATURE, cut_energy, measure, pair_cut_energy, qmc_measure,
)
from engine.mixture import line_spec, pair_spec, triangle_spec
from engine.regions import (
    Ball, Box, Complement, Halfspace, Intersection, Interval, RegionError, VoronoiCell,
    boundary_zone,
)
from models import DeltaNeighborhood, GaussianKernel


class TestMeasure:
    def test_interval_closed_form(self, base_spec):
        result = measure(base_spec, Interval(-1.0, 1.0), 0)
        assert result.method == CLOSED_FORM
        assert result.value == pytest.approx(norm.cdf(1) - norm.cdf(-1), abs=1e-12)

    def test_mean_measure_is_ratio_weighted(self):
        spec = pair_spec(0.3, 2.0, 4.0)
        region = Interval(0.0, 3.0)
        expected = 0.3 * (norm.cdf(3) - 0.5) + 0.7 * (norm.cdf(-0.5) - norm.cdf(-2.0))
        assert measure(spec, region).value == pytest.approx(expected, abs=1e-12)

    def test_halfspace_in_plane(self):
        spec = line_spec(3.0, dimension=2)
        result = measure(spec, Halfspace((1.0, 0.0), 1.5), 1)
        assert result.value == pytest.approx(norm.cdf(-1.5), abs=1e-12)

    def test_box(self):
        spec = line_spec(0.0, dimension=2)
        result = measure(spec, Box((-1.0, -2.0), (1.0, 2.0)), 0)
        expected = (norm.cdf(1) - norm.cdf(-1)) * (norm.cdf(2) - norm.cdf(-2))
        assert result.value == pytest.approx(expected, abs=1e-12)

    def test_rotated_box_is_rotation_invariant(self):
        spec = line_spec(0.0, dimension=2)
        angle = 0.7
        frame = ((math.cos(angle), math.sin(angle)), (-math.sin(angle), math.cos(angle)))
        plain = measure(spec, Box((-1.0, -1.0), (1.0, 1.0)), 0).value
        turned = measure(spec, Box((-1.0, -1.0), (1.0, 1.0), frame=frame), 0).value
        assert turned == pytest.approx(plain, abs=1e-12)

    @pytest.mark.parametrize('dimension', [2, 3])
    def test_centered_ball_is_chi_square(self, dimension):
        spec = line_spec(4.0, dimension=dimension)
        result = measure(spec, Ball((0.0,) * dimension, 1.5), 0)
        assert result.method == QUADRATURE
        assert result.value == pytest.approx(chi2.cdf(1.5 ** 2, dimension), abs=1e-9)

    def test_offset_ball_matches_qmc(self):
        spec = line_spec(4.0, dimension=2)
        ball = Ball((1.0, 0.5), 1.2)
        exact = measure(spec, ball, 0)
        estimate = qmc_measure(spec, ball, 0)
        assert estimate.method == QMC
        assert exact.value == pytest.approx(estimate.value, abs=max(6 * estimate.error, 1e-4))

    def test_high_dimensional_ball_is_lower_bound(self):
        spec = line_spec(2.0, dimension=5)
        result = measure(spec, Ball((0.0,) * 5, 1.0), 0)
        assert result.lower_bound
        assert result.value <= chi2.cdf(1.0, 5)

    def test_slab_uses_profile(self):
        spec = line_spec(2.0, dimension=2)
        zone = boundary_zone(Halfspace((1.0, 0.0), 1.0), 0.5)
        result = measure(spec, zone, 0)
        assert result.method == CLOSED_FORM
        assert result.value == pytest.approx(norm.cdf(1.5) - norm.cdf(0.5), abs=1e-12)

    def test_box_annulus(self):
        spec = line_spec(0.0, dimension=2)
        zone = boundary_zone(Box((-2.0, -2.0), (2.0, 2.0)), 0.5)
        outer = (norm.cdf(2.5) - norm.cdf(-2.5)) ** 2
        inner = (norm.cdf(1.5) - norm.cdf(-1.5)) ** 2
        assert measure(spec, zone, 0).value == pytest.approx(outer - inner, abs=1e-12)

    def test_ball_inside_cut_intersection(self):
        spec = line_spec(4.0, dimension=2)
        ball = Ball((0.0, 0.0), 1.0)
        inside = measure(spec, Intersection(ball, Halfspace((1.0, 0.0), 2.0)), 0)
        assert inside.value == pytest.approx(measure(spec, ball, 0).value, abs=1e-12)

    def test_voronoi_cell_sums_to_one(self):
        spec = triangle_spec(3.0)
        sites = tuple(tuple(row) for row in spec.means)
        total = sum(measure(spec, VoronoiCell(i, sites)).value for i in range(3))
        assert total == pytest.approx(1.0, abs=1e-2)

    def test_dimension_mismatch(self, base_spec):
        with pytest.raises(RegionError):
            measure(base_spec, Ball((0.0, 0.0), 1.0))

    def test_invalid_component(self, base_spec):
        with pytest.raises(RegionError):
            measure(base_spec, Interval(0, 1), 5)


def _delta_energy_1d(c, delta, mu=0.0):
    """Reference: integral over x <= c < y, |x - y| <= delta of phi(x - mu) phi(y - mu)."""
    value, _ = integrate.dblquad(
        lambda y, x: norm.pdf(x - mu) * norm.pdf(y - mu),
        c - delta, c, lambda x: c, lambda x: x + delta, epsabs=1e-12)
    return value


class TestCutEnergy:
    def test_delta_energy_single_gaussian(self):
        spec = pair_spec(0.5, 1.0, 0.0)
        result = cut_energy(spec, Halfspace((1.0,), 0.3), DeltaNeighborhood(0.8))
        assert result.value == pytest.approx(_delta_energy_1d(0.3, 0.8), abs=1e-8)

    def test_energy_symmetric_in_complement(self, base_spec):
        cut = Halfspace((1.0,), 2.5)
        weight = DeltaNeighborhood(1.0)
        first = cut_energy(base_spec, cut, weight).value
        second = cut_energy(base_spec, Complement(cut), weight).value
        assert first == pytest.approx(second, rel=1e-8)

    def test_kernel_energy_single_gaussian(self):
        spec = pair_spec(0.5, 1.0, 0.0)
        value, _ = integrate.dblquad(
            lambda y, x: math.exp(-(x - y) ** 2 / 2) * norm.pdf(x) * norm.pdf(y),
            -12, 0.0, lambda x: 0.0, lambda x: 12.0, epsabs=1e-12)
        result = cut_energy(spec, Halfspace((1.0,), 0.0), GaussianKernel(1.0))
        assert result.value == pytest.approx(value, abs=1e-8)

    def test_plane_energy_reduces_to_chi_square_factor(self):
        spec = line_spec(0.0, dimension=2)
        planar = cut_energy(spec, Halfspace((1.0, 0.0), 0.3), DeltaNeighborhood(0.8)).value
        # the orthogonal coordinate of the difference is N(0, 2)
        value, _ = integrate.dblquad(
            lambda y, x: norm.pdf(x) * norm.pdf(y) * chi2.cdf((0.64 - (y - x) ** 2) / 2, 1),
            0.3 - 0.8, 0.3, lambda x: 0.3, lambda x: x + 0.8, epsabs=1e-12)
        assert planar == pytest.approx(value, abs=1e-7)

    def test_pair_energies_combine(self, base_spec):
        cut = Halfspace((1.0,), 2.5)
        weight = DeltaNeighborhood(1.0)
        total = sum(0.25 * pair_cut_energy(base_spec, cut, weight, j, l).value
                    for j in range(2) for l in range(2))
        assert cut_energy(base_spec, cut, weight).value == pytest.approx(total, rel=1e-12)

    def test_trivial_cut_has_no_energy(self, base_spec):
        cut = Halfspace((1.0,), math.inf)
        assert cut_energy(base_spec, cut, DeltaNeighborhood(1.0)).value == 0.0

    def test_qmc_energy_agrees_with_quadrature(self):
        spec = line_spec(0.0, dimension=2)
        weight = DeltaNeighborhood(0.8)
        exact = cut_energy(spec, Halfspace((1.0, 0.0), 0.3), weight)
        # the same halfspace written as a Voronoi cell forces the QMC path
        cell = VoronoiCell(0, ((0.0, 0.0), (0.6, 0.0)))
        estimate = cut_energy(spec, cell, weight)
        assert estimate.method == QMC
        assert estimate.value == pytest.approx(exact.value, abs=max(6 * estimate.error, 2e-3))

    def test_energy_decreases_with_separation(self):
        weight = DeltaNeighborhood(1.0)
        near = pair_spec(0.5, 1.0, 3.0)
        far = pair_spec(0.5, 1.0, 6.0)
        e_near = cut_energy(near, Halfspace((1.0,), 1.5), weight).value
        e_far = cut_energy(far, Halfspace((1.0,), 3.0), weight).value
        assert e_far < e_near

    def test_dimension_mismatch(self, base_spec):
        with pytest.raises(RegionError):
            cut_energy(base_spec, Halfspace((1.0, 0.0), 0.0), DeltaNeighborhood(1.0))


def test_measure_values_are_probabilities(base_spec):
    for region in (Interval(-100, 100), Halfspace((1.0,), -math.inf), Interval(2.0, 2.0)):
        value = measure(base_spec, region).value
        assert 0.0 <= value <= 1.0
    assert np.isclose(measure(base_spec, Interval(-100, 100)).value, 1.0)
