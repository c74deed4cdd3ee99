"""Experiment runners: turn a validated ExperimentConfig into result tables.

Each runner returns a ResultTable whose rows are plain dicts keyed by the
table's columns, in a deterministic order.
"""

import itertools
import logging
import math
from dataclasses import dataclass, field

from engine.bounds import (
    PreconditionFailed, UnsupportedSetting, bound_small_n_delta, bound_small_n_weight,
    incomparability_bound,
)
from engine.mixture import canonical_labeling
from engine.presets import build_cuts, build_model, build_spec, square_factors
from engine.simulator import estimate_event_probability, estimate_incomparability
from engine.thresholds import (
    CONDITIONS, LARGE_N, SMALL_N, NotFoundError, default_radius_grid, min_separable_lambda_1d,
    min_separable_lambda_dimension, min_separable_lambda_kernel_1d,
    min_separable_lambda_kernel_width, min_separable_lambda_voronoi,
    optimize_incomparability_radius, optimize_radius, threshold_of,
)
from models import DeltaNeighborhood

logger = logging.getLogger(__name__)

POINT_COLUMNS = ['lambda', 'n', 'r', 'alpha', 'dimension']
REPORT_COLUMNS = ['containment_slack', 'mass_slack', 'hoeffding_branch', 'berry_esseen_branch',
                  'size_correction', 'raw', 'combined', 'order_floor']
BOUND_COLUMNS = POINT_COLUMNS + ['event', 'parameter', 'factor', 'feasible'] + REPORT_COLUMNS + [
    'bound']
SIMULATE_COLUMNS = POINT_COLUMNS + ['parameter', 'factor', 'feasible', 'bound', 'estimate',
                                    'standard_error', 'wilson_lo', 'wilson_hi', 'trials']


@dataclass
class ResultTable:
    columns: list
    rows: list = field(default_factory=list)

    def add(self, **values):
        self.rows.append({column: values.get(column) for column in self.columns})


@dataclass
class PointResult:
    """Best bound found for one sweep point."""
    parameter: float = math.nan
    factor: float = None
    bound: float = math.nan
    reports: dict = field(default_factory=dict)
    cuts: object = None
    radii: dict = None

    @property
    def feasible(self):
        return bool(self.reports)


# -- thresholds ---------------------------------------------------------------

def _lambda_or_nan(search, *args):
    try:
        return search(*args)
    except NotFoundError as exc:
        logger.warning("%s", exc)
        return math.nan


def run_threshold(cfg):
    kind = cfg.threshold
    r_default = cfg.mixture.get('r', 0.5)
    if kind == 'one_dim':
        table = ResultTable(['r', 'alpha', 'condition', 'lambda_star'])
        for r, alpha, condition in itertools.product(
                cfg.axis('r', [r_default]), cfg.axis('alpha', [cfg.mixture.get('alpha', 1.0)]),
                cfg.axis('condition', list(CONDITIONS))):
            table.add(r=r, alpha=alpha, condition=condition,
                      lambda_star=_lambda_or_nan(min_separable_lambda_1d, r, alpha, condition))
    elif kind == 'kernel':
        table = ResultTable(['r', 'lambda_star'])
        for r in cfg.axis('r', [r_default]):
            table.add(r=r, lambda_star=_lambda_or_nan(min_separable_lambda_kernel_1d, r))
    elif kind == 'kernel_width':
        table = ResultTable(['width', 'lambda_star'])
        for width in cfg.axis('width', []):
            table.add(width=width,
                      lambda_star=_lambda_or_nan(min_separable_lambda_kernel_width, r_default, width))
    elif kind == 'voronoi':
        table = ResultTable(['dimension', 'lambda_star'])
        for d in cfg.axis('dimension', [2]):
            table.add(dimension=d, lambda_star=_lambda_or_nan(min_separable_lambda_voronoi, d))
    else:
        table = ResultTable(['dimension', 'theorem', 'lambda_star'])
        for d, theorem in itertools.product(cfg.axis('dimension', [1, 2, 3]),
                                            cfg.axis('theorem', [LARGE_N, SMALL_N])):
            table.add(dimension=d, theorem=theorem,
                      lambda_star=_lambda_or_nan(min_separable_lambda_dimension, d, theorem))
    return table


# -- bounds ---------------------------------------------------------------------

def _points(cfg):
    lambdas = cfg.axis('lambda', [None])
    for lam, n, r, alpha, d in itertools.product(
            lambdas, cfg.axis('n'), cfg.axis('r', [None]), cfg.axis('alpha', [None]),
            cfg.axis('dimension', [None])):
        yield {'lambda': lam, 'n': n, 'r': r, 'alpha': alpha, 'dimension': d}


def _events(cfg, cuts):
    if cfg.target == 'event':
        k = cfg.k
        other = 1 if k == 0 else 0
        return [(k, other)]
    return cuts.events()


def _radius_grid(spec, lam):
    sigma = float(spec.stddevs.max())
    hi = 4.0 * sigma if lam is None else min(4.0 * sigma, lam)
    return default_radius_grid(spec, hi)


def _delta_point(cfg, spec, labeling, cuts, lam, threads=None):
    events = _events(cfg, cuts)
    delta = cfg.graph.get('delta', 'optimize')
    if delta != 'optimize':
        try:
            reports = {e: bound_small_n_delta(spec, labeling, e[0], delta, cuts.get(*e))
                       for e in events}
        except (PreconditionFailed, UnsupportedSetting) as exc:
            logger.debug("delta=%s infeasible: %s", delta, exc)
            return PointResult(parameter=delta, cuts=cuts)
        return PointResult(parameter=delta, bound=_union(reports, events), reports=reports,
                           cuts=cuts)
    grid = _radius_grid(spec, lam)
    try:
        if cfg.target == 'event':
            (k, other), = events
            delta, report = optimize_radius(spec, labeling, k, cuts.get(k, other), 'delta', grid,
                                           threads)
            reports = {(k, other): report}
            return PointResult(parameter=delta, bound=report.combined, reports=reports, cuts=cuts)
        delta, bound, reports = optimize_incomparability_radius(spec, labeling, cuts, grid, threads)
    except NotFoundError:
        return PointResult(cuts=cuts)
    return PointResult(parameter=delta, bound=bound, reports=reports, cuts=cuts)


def _union(reports, events):
    return max(0.0, 1.0 - sum(1.0 - reports[e].combined for e in events))


def _kernel_point(cfg, spec, labeling, cuts, lam, threads=None):
    width = cfg.graph.get('width', 'optimize')
    reports, radii = {}, {}
    try:
        for k, other in _events(cfg, cuts):
            cut = cuts.get(k, other)
            if width == 'optimize':
                radii[(k, other)], reports[(k, other)] = optimize_radius(
                    spec, labeling, k, cut, 'kernel', _radius_grid(spec, None), threads)
            else:
                c, side = threshold_of(cut)
                radii[(k, other)] = width
                reports[(k, other)] = bound_small_n_weight(spec, labeling, k, width, c, side)
    except (NotFoundError, PreconditionFailed) as exc:
        logger.debug("kernel bound infeasible: %s", exc)
        return PointResult(cuts=cuts)
    bound = (incomparability_bound(reports, cuts) if cfg.target == 'incomparability'
             else next(iter(reports.values())).combined)
    parameter = radii[min(radii)]
    return PointResult(parameter=parameter, bound=bound, reports=reports, cuts=cuts, radii=radii)


def evaluate_point(cfg, spec, labeling, lam, threads=None):
    """Best bound for one sweep point (over square sizes when the cut template has several)."""
    point = _kernel_point if cfg.graph['model'] == 'kernel' else _delta_point
    if cfg.cut.get('template') != 'square':
        return point(cfg, spec, labeling, build_cuts(cfg.cut, spec, lam), lam, threads)
    results = []
    for factor in sorted(square_factors(cfg.cut)):
        result = point(cfg, spec, labeling, build_cuts(cfg.cut, spec, lam, factor), lam,
                       threads)
        result.factor = factor
        results.append(result)
    feasible = [result for result in results if result.feasible]
    return max(feasible, key=lambda result: result.bound) if feasible else results[0]


def _setting(cfg, values):
    spec = build_spec(cfg.mixture, values['lambda'], values['r'], values['alpha'],
                      values['dimension'])
    return spec, canonical_labeling(spec, values['n'])


def _report_columns(report):
    slacks = [p.slack for p in report.preconditions] + [math.nan, math.nan]
    return {
        'containment_slack': slacks[0], 'mass_slack': slacks[1],
        'hoeffding_branch': report.hoeffding_branch,
        'berry_esseen_branch': report.berry_esseen_branch,
        'size_correction': report.size_correction, 'raw': report.raw,
        'combined': report.combined, 'order_floor': report.order_floor,
    }


def run_bound(cfg, threads=None):
    table = ResultTable(BOUND_COLUMNS)
    feasible = 0
    for values in _points(cfg):
        spec, labeling = _setting(cfg, values)
        result = evaluate_point(cfg, spec, labeling, values['lambda'], threads)
        if not result.feasible:
            table.add(**values, parameter=result.parameter, factor=result.factor, feasible=0,
                      bound=0.0)
            continue
        feasible += 1
        for (k1, k2), report in sorted(result.reports.items()):
            parameter = result.radii[(k1, k2)] if result.radii else result.parameter
            table.add(**values, event=f"{k1}|{k2}", parameter=parameter, factor=result.factor,
                      feasible=1, bound=result.bound, **_report_columns(report))
    if not feasible:
        raise NotFoundError("No sweep point satisfies the bound's preconditions")
    return table


def run_simulate(cfg, threads=None, recorder=None, graph_dump=None):
    """Estimate every sweep point; graph_dump receives the first trial graph of the first point."""
    table = ResultTable(SIMULATE_COLUMNS)
    for index, values in enumerate(_points(cfg)):
        dump = graph_dump if index == 0 else None
        spec, labeling = _setting(cfg, values)
        result = evaluate_point(cfg, spec, labeling, values['lambda'], threads)
        if cfg.graph['model'] == 'delta':
            if not result.feasible and cfg.graph.get('delta', 'optimize') == 'optimize':
                table.add(**values, feasible=0, bound=0.0)
                continue
            model = DeltaNeighborhood(result.parameter)
            radius, radii = None, None
        else:
            if not result.feasible:
                table.add(**values, feasible=0, bound=0.0)
                continue
            model = build_model(cfg.graph, spec)
            radius, radii = None, result.radii
        cuts = result.cuts or build_cuts(cfg.cut, spec, values['lambda'], result.factor)
        if cfg.target == 'event':
            (k, other), = _events(cfg, cuts)
            estimate = estimate_event_probability(
                spec, labeling, model, k, cuts.get(k, other), trials=cfg.trials, seed=cfg.seed,
                radius=radii[(k, other)] if radii else radius, threads=threads,
                recorder=recorder, graph_dump=dump)
        else:
            estimate = estimate_incomparability(spec, labeling, model, cuts, trials=cfg.trials,
                                                seed=cfg.seed, radius=radius, radii=radii,
                                                threads=threads, recorder=recorder,
                                                graph_dump=dump)
        table.add(**values, parameter=result.parameter, factor=result.factor,
                  feasible=int(result.feasible), bound=result.bound if result.feasible else 0.0,
                  estimate=estimate.estimate, standard_error=estimate.standard_error,
                  wilson_lo=estimate.wilson_lo, wilson_hi=estimate.wilson_hi,
                  trials=estimate.trials)
    return table
