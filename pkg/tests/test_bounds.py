"""Tests for theorem conditions and probability bounds."""

import math

import numpy as np
import pytest
from scipy.stats import binom, norm

from engine.bounds import (
    HOEFFDING_RANGE, BoundsError, CutAssignment, MissingEventError, PreconditionFailed,
    UnsupportedSetting, berry_esseen_branch, bound_small_n_delta, bound_small_n_weight,
    conditions_large_n_delta, conditions_large_n_weight, events_large_n_delta,
    events_small_n_delta, expected_kernel_decay, hoeffding_branch, incomparability_bound,
    moment_formulas, order_floor, size_at_least_two, size_tail, square_cut, square_cuts,
    square_frame, threshold_cut, voronoi_cuts,
)
from engine.measure import cut_energy, measure
from engine.mixture import canonical_labeling, line_spec, pair_spec, triangle_spec
from engine.regions import (
    Box, BoundaryZone, Complement, Halfspace, Interval, VoronoiCell, ball_around_mean,
    contains,
)
from models import BoundReport, DeltaNeighborhood, GaussianKernel, SpecError


@pytest.fixture
def far_spec():
    """Means 0 and 8: well separated, so every finite-n bound is informative."""
    return pair_spec(0.5, 1.0, 8.0)


class TestSizeTail:
    def test_matches_binomial(self):
        nu, n = 0.03, 100
        expected = 1 - binom.pmf(0, n, nu) - binom.pmf(1, n, nu)
        assert size_tail([nu], [n]) == pytest.approx(expected, rel=1e-12)

    def test_two_components(self):
        # |V_A| = X + Y with X ~ Bin(10, 0.1), Y ~ Bin(20, 0.05)
        p0 = binom.pmf(0, 10, 0.1) * binom.pmf(0, 20, 0.05)
        p1 = (binom.pmf(1, 10, 0.1) * binom.pmf(0, 20, 0.05)
              + binom.pmf(0, 10, 0.1) * binom.pmf(1, 20, 0.05))
        assert size_tail([0.1, 0.05], [10, 20]) == pytest.approx(1 - p0 - p1, rel=1e-12)

    def test_zero_measure(self):
        assert size_tail([0.0, 0.0], [50, 50]) == 0.0

    def test_full_measure_rejected(self):
        with pytest.raises(BoundsError):
            size_tail([1.0], [10])

    def test_size_at_least_two_is_probability(self, base_spec, base_labeling):
        value = size_at_least_two(base_spec, base_labeling, Interval(-0.5, 0.5))
        assert 0.0 <= value <= 1.0
        assert value > 0.99


class TestMomentFormulas:
    def test_binomial_moments(self, base_spec, base_labeling):
        region = Interval(1.0, 2.0)
        moments = moment_formulas(base_spec, base_labeling, region, DeltaNeighborhood(1.0),
                                  Halfspace((1.0,), 2.5))
        nu0 = norm.cdf(2) - norm.cdf(1)
        nu1 = norm.cdf(-3) - norm.cdf(-4)
        assert moments.mean == pytest.approx(50 * nu0 + 50 * nu1, rel=1e-10)
        assert moments.variance == pytest.approx(50 * nu0 * (1 - nu0) + 50 * nu1 * (1 - nu1),
                                                 rel=1e-10)
        assert moments.second_moment == pytest.approx(moments.variance + moments.mean ** 2)

    def test_kappa_mean_excludes_self_pairs(self):
        spec = pair_spec(0.5, 1.0, 0.0)
        labeling = canonical_labeling(spec, 10)
        cut = Halfspace((1.0,), 0.0)
        weight = DeltaNeighborhood(1.0)
        moments = moment_formulas(spec, labeling, Interval(-1, 1), weight, cut)
        energy = cut_energy(spec, cut, weight).value
        # identical components: n(n - 1) ordered pairs of distinct points
        assert moments.kappa_mean == pytest.approx(10 * 9 * energy, rel=1e-9)


class TestLargeN:
    def test_far_means_satisfy_conditions(self, far_spec):
        cut = Halfspace((1.0,), 4.0)
        pair = conditions_large_n_delta(far_spec, 0, 1.0, cut)
        assert pair.holds
        assert pair.majority.slack > 0 and pair.order.slack > 0
        assert pair.slack == min(pair.majority.slack, pair.order.slack)

    def test_close_means_fail_order(self):
        spec = pair_spec(0.5, 1.0, 1.0)
        pair = conditions_large_n_delta(spec, 0, 1.0, Halfspace((1.0,), 0.5))
        assert not pair.order.holds

    def test_majority_fails_on_wrong_side(self, far_spec):
        pair = conditions_large_n_delta(far_spec, 1, 1.0, Halfspace((1.0,), 4.0))
        assert not pair.majority.holds

    def test_kernel_conditions(self, far_spec):
        pair = conditions_large_n_weight(far_spec, 0, 1.0, Halfspace((1.0,), 4.0))
        assert pair.holds

    def test_kernel_needs_equal_stddevs(self):
        spec = pair_spec(0.5, 2.0, 8.0)
        with pytest.raises(UnsupportedSetting):
            conditions_large_n_weight(spec, 0, 1.0, Halfspace((1.0,), 4.0))

    def test_events_cover_both_orientations(self, far_spec):
        cuts = CutAssignment(2, {(0, 1): Halfspace((1.0,), 4.0)})
        results = events_large_n_delta(far_spec, cuts, 1.0)
        assert set(results) == {(0, 1), (1, 0)}
        assert all(pair.holds for pair in results.values())


class TestBranches:
    def test_hoeffding(self):
        assert hoeffding_branch(100, 0.1, 1.0) == pytest.approx(1 - math.exp(-2.0))

    def test_berry_esseen_degenerate_variance(self):
        assert berry_esseen_branch(-1.0, 0.0, 0.0) == -math.inf

    def test_berry_esseen_value(self):
        value = berry_esseen_branch(-10.0, 4.0, 1.0)
        assert value == pytest.approx(norm.cdf(5.0) - 0.5591 / 8.0)


class TestSmallNDelta:
    def test_report_fields(self, far_spec):
        labeling = canonical_labeling(far_spec, 900)
        report = bound_small_n_delta(far_spec, labeling, 0, 1.0, Halfspace((1.0,), 4.0))
        assert isinstance(report, BoundReport)
        assert report.valid
        assert [p.name for p in report.preconditions] == ['ball_in_cut', 'ball_vs_boundary']
        assert 0.0 <= report.combined <= 1.0
        assert report.combined <= max(report.hoeffding_branch, report.berry_esseen_branch)
        assert report.raw == pytest.approx(
            max(report.hoeffding_branch, report.berry_esseen_branch) - report.size_correction)
        assert report.combined > 0.99

    def test_hoeffding_uses_slack(self, far_spec):
        labeling = canonical_labeling(far_spec, 100)
        report = bound_small_n_delta(far_spec, labeling, 0, 1.0, Halfspace((1.0,), 4.0))
        slack = report.preconditions[1].slack
        expected = 1 - math.exp(-2 * 100 * slack ** 2 / HOEFFDING_RANGE ** 2)
        assert report.hoeffding_branch == pytest.approx(expected, rel=1e-12)

    def test_bound_grows_with_n(self, far_spec):
        cut = Halfspace((1.0,), 4.0)
        small = bound_small_n_delta(far_spec, canonical_labeling(far_spec, 20), 0, 1.0, cut)
        large = bound_small_n_delta(far_spec, canonical_labeling(far_spec, 400), 0, 1.0, cut)
        assert large.raw >= small.raw

    def test_hoeffding_branch_nondecreasing_in_n(self, far_spec):
        cut = Halfspace((1.0,), 4.0)
        branches = [bound_small_n_delta(far_spec, canonical_labeling(far_spec, n), 0, 1.0,
                                        cut).hoeffding_branch
                    for n in (100, 400, 900, 1600)]
        assert branches == sorted(branches)

    def test_ball_outside_cut(self, far_spec, base_labeling):
        with pytest.raises(PreconditionFailed) as exc:
            bound_small_n_delta(far_spec, base_labeling, 1, 1.0, Halfspace((1.0,), 4.0))
        assert exc.value.name == 'ball_in_cut'

    def test_boundary_too_heavy(self, base_labeling):
        spec = pair_spec(0.5, 1.0, 1.5)
        with pytest.raises(PreconditionFailed) as exc:
            bound_small_n_delta(spec, base_labeling, 0, 0.5, Halfspace((1.0,), 0.75))
        assert exc.value.name == 'ball_vs_boundary'
        assert exc.value.slack <= 0

    def test_double_complement_box_cut(self):
        spec = line_spec(8.0, dimension=2)
        labeling = canonical_labeling(spec, 100)
        cut = Complement(Complement(Box((-4.0, -4.0), (4.0, 4.0))))
        assert bound_small_n_delta(spec, labeling, 0, 1.0, cut).valid

    def test_unsupported_shape(self):
        spec = line_spec(8.0, dimension=2)
        labeling = canonical_labeling(spec, 100)
        cut = BoundaryZone(Halfspace((1.0, 0.0), 4.0), 6.0)
        with pytest.raises(UnsupportedSetting):
            bound_small_n_delta(spec, labeling, 0, 1.0, cut)

    def test_n_mismatch(self, far_spec, base_labeling):
        with pytest.raises(BoundsError):
            bound_small_n_delta(far_spec, base_labeling, 0, 1.0, Halfspace((1.0,), 4.0), n=7)

    def test_order_floor(self, far_spec):
        ball = ball_around_mean(far_spec, 0, 1.0)
        nu_b = measure(far_spec, ball).value
        assert order_floor(far_spec, 0, 1.0, 100) == pytest.approx(0.9 * 1e4 * 2 / 9 * nu_b ** 2)
        assert order_floor(far_spec, 0, 1.0, 100, epsilon=0.0) > order_floor(far_spec, 0, 1.0, 100)
        with pytest.raises(BoundsError):
            order_floor(far_spec, 0, 1.0, 100, epsilon=2.0)


class TestSmallNWeight:
    def test_threshold_cut_sides(self):
        assert threshold_cut(2.0) == Halfspace((1.0,), 2.0)
        assert threshold_cut(2.0, 'right') == Complement(Halfspace((1.0,), 2.0))
        with pytest.raises(BoundsError):
            threshold_cut(2.0, 'up')

    def test_expected_decay(self):
        # E exp(-X^2 / 2) for X ~ N(0, 1) is 1 / sqrt(2)
        assert expected_kernel_decay(0.0, 0.0, 1.0) == pytest.approx(1 / math.sqrt(2))

    def test_far_means_give_high_bound(self):
        spec = pair_spec(0.5, 1.0, 14.0)
        labeling = canonical_labeling(spec, 1600)
        report = bound_small_n_weight(spec, labeling, 0, 1.0, 7.0)
        assert report.valid
        assert report.berry_esseen_branch == -math.inf
        assert report.combined > 0.5
        assert [p.name for p in report.preconditions] == ['interval_in_cut',
                                                          'interval_vs_cut_mass']

    def test_right_side(self):
        spec = pair_spec(0.5, 1.0, 14.0)
        labeling = canonical_labeling(spec, 1600)
        left = bound_small_n_weight(spec, labeling, 0, 1.0, 7.0, 'left')
        right = bound_small_n_weight(spec, labeling, 1, 1.0, 7.0, 'right')
        assert right.combined == pytest.approx(left.combined, rel=1e-9)

    def test_interval_must_lie_in_cut(self, base_labeling):
        spec = pair_spec(0.5, 1.0, 14.0)
        with pytest.raises(PreconditionFailed) as exc:
            bound_small_n_weight(spec, base_labeling, 0, 4.0, 1.0)
        assert exc.value.name == 'interval_in_cut'
        assert exc.value.slack == pytest.approx(-1.0)

    def test_close_means_fail_mass_condition(self, base_labeling):
        spec = pair_spec(0.5, 1.0, 2.0)
        with pytest.raises(PreconditionFailed) as exc:
            bound_small_n_weight(spec, base_labeling, 0, 1.0, 1.0)
        assert exc.value.name == 'interval_vs_cut_mass'

    def test_one_dimension_only(self):
        spec = line_spec(8.0, dimension=2)
        with pytest.raises(UnsupportedSetting):
            bound_small_n_weight(spec, canonical_labeling(spec, 100), 0, 1.0, 4.0)

    def test_kernel_floor_carries_decay(self, far_spec):
        plain = order_floor(far_spec, 0, 1.0, 100)
        kernel = order_floor(far_spec, 0, 1.0, 100, kernel=True)
        assert kernel == pytest.approx(plain * math.exp(-0.5))


class TestCutFamilies:
    def test_complement_for_reversed_pair(self):
        cut = Halfspace((1.0,), 4.0)
        cuts = CutAssignment(2, {(0, 1): cut})
        assert cuts.get(0, 1) == cut
        assert cuts.get(1, 0) == Complement(cut)
        assert cuts.events() == [(0, 1), (1, 0)]

    def test_reversed_key_is_stored_as_complement(self):
        cut = Halfspace((1.0,), 4.0)
        cuts = CutAssignment(2, {(1, 0): cut})
        assert cuts.get(1, 0) == cut

    def test_missing_pair(self):
        with pytest.raises(BoundsError, match="No cut assigned"):
            CutAssignment(3, {(0, 1): Halfspace((1.0, 0.0), 0.0)})

    def test_invalid_pair(self):
        with pytest.raises(BoundsError):
            CutAssignment(2, {(0, 0): Halfspace((1.0,), 0.0)})

    def test_voronoi_cuts(self):
        spec = triangle_spec(6.0)
        cuts = voronoi_cuts(spec)
        assert len(cuts.events()) == 6
        assert isinstance(cuts.get(0, 2), VoronoiCell)
        assert contains(cuts.get(2, 0), spec.means[2])

    def test_square_frame_puts_bisector_on_diagonal(self):
        spec = triangle_spec(6.0)
        frame = np.array(square_frame(spec, 0))
        heading = spec.means[1:].mean(axis=0) - spec.means[0]
        local = frame @ (heading / np.linalg.norm(heading))
        assert local[0] == pytest.approx(local[1])
        assert np.allclose(frame @ frame.T, np.eye(2))

    def test_square_cut_centered_on_mean(self):
        spec = triangle_spec(6.0)
        square = square_cut(spec, 1, 1.5)
        assert contains(square, spec.means[1])
        assert not contains(square, spec.means[0])
        cuts = square_cuts(spec, 1.5)
        assert cuts.get(1, 2) == square

    def test_square_needs_plane(self):
        with pytest.raises(UnsupportedSetting):
            square_frame(line_spec(4.0, dimension=3), 0)


class TestIncomparability:
    def test_union_bound(self, far_spec):
        labeling = canonical_labeling(far_spec, 400)
        cuts = CutAssignment(2, {(0, 1): Halfspace((1.0,), 4.0)})
        reports = events_small_n_delta(far_spec, labeling, cuts, 1.0)
        bound = incomparability_bound(reports, cuts)
        expected = 1 - sum(1 - r.combined for r in reports.values())
        assert bound == pytest.approx(max(expected, 0.0))
        assert bound <= min(r.combined for r in reports.values())

    def test_accepts_plain_numbers(self):
        cuts = CutAssignment(2, {(0, 1): Halfspace((1.0,), 0.0)})
        assert incomparability_bound({(0, 1): 0.9, (1, 0): 0.8}, cuts) == pytest.approx(0.7)
        assert incomparability_bound({(0, 1): 0.2, (1, 0): 0.3}, cuts) == 0.0

    def test_missing_event(self):
        cuts = CutAssignment(2, {(0, 1): Halfspace((1.0,), 0.0)})
        with pytest.raises(MissingEventError):
            incomparability_bound({(0, 1): 0.9}, cuts)


def test_report_rejects_combined_above_branches():
    with pytest.raises(SpecError):
        BoundReport(preconditions=(), hoeffding_branch=0.2, berry_esseen_branch=0.1,
                    size_correction=0.0, raw=0.2, combined=0.5, order_floor=0.0)


def test_kernel_weight_model_is_used_for_moments(far_spec, base_labeling):
    moments = moment_formulas(far_spec, base_labeling, Interval(-0.5, 0.5),
                              GaussianKernel(1.0), Halfspace((1.0,), 4.0))
    assert moments.kappa_mean > 0
