"""Tests for threshold searches and bound maximization."""

import math

import numpy as np
import pytest

import config as settings
from engine.bounds import (
    BoundsError, CutAssignment, PreconditionFailed, UnsupportedSetting, size_tail,
)
from engine.mixture import canonical_labeling, line_spec, mean_density_1d, pair_spec
from engine.regions import Complement, Halfspace
from engine.thresholds import (
    LARGE_N, NotFoundError, argmin_mean_density_1d, maximize, midpoint_cut,
    min_separable_lambda, min_separable_lambda_1d, min_separable_lambda_dimension,
    min_separable_lambda_kernel_1d, min_separable_lambda_kernel_width, min_separable_lambda_voronoi,
    optimize_incomparability_radius, optimize_radius, threshold_of,
)
from models import BoundReport, Component, MixtureSpec


class TestDensityMinimum:
    def test_symmetric_pair(self):
        spec = pair_spec(0.5, 1.0, 4.0)
        assert argmin_mean_density_1d(spec, 0.0, 4.0) == pytest.approx(2.0, abs=1e-6)

    def test_minimum_moves_towards_lighter_component(self):
        spec = pair_spec(0.3, 1.0, 4.0)
        assert argmin_mean_density_1d(spec, 0.0, 4.0) < 2.0

    def test_matches_dense_grid(self):
        spec = pair_spec(0.3, 1.0, 4.0)
        xs = np.linspace(0.0, 4.0, 10 ** 6 + 1)
        expected = xs[int(np.argmin(mean_density_1d(spec, xs)))]
        # one grid step is 4e-6
        assert argmin_mean_density_1d(spec, 0.0, 4.0) == pytest.approx(expected, abs=4e-6)

    def test_single_component_tail(self):
        spec = MixtureSpec(1, (Component(1, (0.0,), 1.0),))
        assert argmin_mean_density_1d(spec, 1.0, 2.0) == pytest.approx(2.0)

    def test_needs_line(self):
        with pytest.raises(UnsupportedSetting):
            argmin_mean_density_1d(line_spec(4.0, dimension=2), 0.0, 4.0)

    def test_empty_interval(self, base_spec):
        with pytest.raises(BoundsError):
            argmin_mean_density_1d(base_spec, 3.0, 3.0)

    def test_midpoint_cut_orientation(self, base_spec):
        cut = midpoint_cut(base_spec)
        assert isinstance(cut, Halfspace)
        assert cut.offset == pytest.approx(2.5, abs=1e-6)
        assert isinstance(midpoint_cut(base_spec, 1, 0), Complement)

    def test_midpoint_cut_in_plane(self):
        cut = midpoint_cut(line_spec(4.0, dimension=2))
        assert cut.normal == pytest.approx((1.0, 0.0))
        assert cut.offset == pytest.approx(2.0, abs=1e-6)


class TestLambdaSearch:
    def test_linear_slack(self):
        assert min_separable_lambda(lambda lam: lam - 3.01, 10.0) == pytest.approx(3.01, abs=1e-4)

    def test_never_holds(self):
        with pytest.raises(NotFoundError):
            min_separable_lambda(lambda lam: -1.0, 10.0)

    def test_holds_from_the_start(self):
        assert min_separable_lambda(lambda lam: 1.0, 10.0, scan_points=20) == pytest.approx(0.5)

    @pytest.mark.parametrize('condition,expected', [
        ('two-thirds', 2.948),
        ('root-two-thirds', 3.397),
    ])
    def test_equal_mixture_thresholds(self, condition, expected):
        assert min_separable_lambda_1d(0.5, 1.0, condition) == pytest.approx(expected, abs=5e-3)

    def test_stricter_condition_needs_more_separation(self):
        loose = min_separable_lambda_1d(0.3, 1.0, 'two-thirds')
        strict = min_separable_lambda_1d(0.3, 1.0, 'root-two-thirds')
        assert strict > loose

    def test_threshold_scales_with_sigma(self):
        assert min_separable_lambda_1d(0.5, 1.0, sigma=2.0) == pytest.approx(
            2 * min_separable_lambda_1d(0.5, 1.0), abs=1e-2)

    def test_unknown_condition(self):
        with pytest.raises(BoundsError, match="Unknown condition"):
            min_separable_lambda_1d(0.5, 1.0, 'half')

    def test_invalid_ratio(self):
        with pytest.raises(BoundsError):
            min_separable_lambda_1d(1.0, 1.0)


@pytest.mark.slow
class TestSlowThresholds:
    def test_kernel_threshold(self):
        assert min_separable_lambda_kernel_1d(0.5) == pytest.approx(4.27, abs=0.03)

    def test_voronoi_threshold(self, monkeypatch):
        monkeypatch.setattr(settings.current(), 'QMC_POINTS', 2 ** 18)
        assert min_separable_lambda_voronoi(2) == pytest.approx(4.1, abs=0.1)

    def test_kernel_width_trade_off(self):
        narrow, best, wide = (min_separable_lambda_kernel_width(0.5, width)
                              for width in (0.25, 1.5, 4.0))
        assert best < narrow
        assert best < wide
        assert best >= min_separable_lambda_kernel_1d(0.5) - 1e-2

    def test_dimension_search_runs(self):
        lam = min_separable_lambda_dimension(1, LARGE_N)
        assert 0 < lam < 10


def test_dimension_search_rejects_unknown_theorem():
    with pytest.raises(BoundsError):
        min_separable_lambda_dimension(2, 'medium-n')


class TestMaximize:
    def test_refines_between_grid_points(self):
        best, payload = maximize(lambda p: (-(p - 2.1) ** 2, p), [0.0, 1.0, 2.0, 3.0, 4.0])
        assert best == pytest.approx(2.1, abs=1e-3)
        assert payload == pytest.approx(best)

    def test_ties_go_to_smallest(self):
        best, _ = maximize(lambda p: (1.0, None), [3.0, 1.0, 2.0])
        assert best == 1.0

    def test_threads_give_same_answer(self):
        def evaluate(p):
            return -abs(p - 1.3), p
        grid = [0.25 * i for i in range(1, 17)]
        assert maximize(evaluate, grid, threads=1) == maximize(evaluate, grid, threads=4)

    def test_infeasible_points_are_skipped(self):
        def evaluate(p):
            if p < 2.0:
                raise PreconditionFailed('ball_in_cut', math.nan)
            return -p, p
        best, _ = maximize(evaluate, [1.0, 2.0, 3.0])
        assert best == pytest.approx(2.0, abs=1e-3)

    def test_degenerate_measures_are_skipped(self):
        def evaluate(p):
            if p < 2.0:
                size_tail([1.0], [3])
            return -p, p
        best, _ = maximize(evaluate, [1.0, 2.0, 3.0])
        assert best == pytest.approx(2.0, abs=1e-3)

    def test_nothing_feasible(self):
        with pytest.raises(NotFoundError):
            maximize(lambda p: (-math.inf, None), [1.0, 2.0])

    def test_empty_grid(self):
        with pytest.raises(BoundsError):
            maximize(lambda p: (0.0, None), [])


class TestOptimizeRadius:
    def test_threshold_of(self):
        assert threshold_of(Halfspace((1.0,), 2.0)) == (2.0, 'left')
        assert threshold_of(Complement(Halfspace((1.0,), 2.0))) == (2.0, 'right')
        with pytest.raises(UnsupportedSetting):
            threshold_of(Halfspace((1.0, 0.0), 2.0))

    def test_delta_graph(self):
        spec = pair_spec(0.5, 1.0, 8.0)
        labeling = canonical_labeling(spec, 400)
        delta, report = optimize_radius(spec, labeling, 0, Halfspace((1.0,), 4.0))
        assert isinstance(report, BoundReport)
        assert report.valid
        assert 0 < delta <= 4.0
        assert report.combined > 0.9

    def test_kernel_graph(self):
        spec = pair_spec(0.5, 1.0, 14.0)
        labeling = canonical_labeling(spec, 1600)
        width, report = optimize_radius(spec, labeling, 0, Halfspace((1.0,), 7.0),
                                        model='kernel')
        assert report.valid
        assert width > 0

    @pytest.mark.parametrize('n,berry_esseen_wins', [(100, True), (10 ** 4, False)])
    def test_branch_crossover(self, n, berry_esseen_wins):
        spec = pair_spec(0.5, 1.0, 5.0)
        _, report = optimize_radius(spec, canonical_labeling(spec, n), 0,
                                    Halfspace((1.0,), 2.5))
        assert bool(report.berry_esseen_branch > report.hoeffding_branch) == berry_esseen_wins

    def test_unknown_model(self, base_spec, base_labeling):
        with pytest.raises(BoundsError):
            optimize_radius(base_spec, base_labeling, 0, Halfspace((1.0,), 2.5), model='knn')

    def test_incomparability(self):
        spec = pair_spec(0.5, 1.0, 8.0)
        labeling = canonical_labeling(spec, 400)
        cuts = CutAssignment(2, {(0, 1): Halfspace((1.0,), 4.0)})
        delta, bound, reports = optimize_incomparability_radius(spec, labeling, cuts)
        assert set(reports) == {(0, 1), (1, 0)}
        assert 0 < bound <= 1
        assert delta > 0
