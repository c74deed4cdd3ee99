"""Monte Carlo controller: samples datasets and evaluates tangle events trial by trial.

Each trial draws its dataset from a seed derived from (seed, trial index),
so results do not depend on how trials are spread over threads.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

import config
from engine.bounds import moment_formulas, size_at_least_two
from engine.graph import (
    build_graph, clique_order, dump_edge_list, edge_connectivity, min_clique_weight, vertices_in,
)
from engine.mixture import canonical_labeling, compatible_counts, sample_dataset, trial_seed
from engine.regions import Complement, Halfspace, ball_around_mean, boundary_zone
from models import DeltaNeighborhood, GaussianKernel, SpecError, TrialOutcome
from tracking.analyzer import growth_slope, moment_rows, summarize_successes

logger = logging.getLogger(__name__)

KAPPA_RELATIVE_TOLERANCE = 1e-12


class OracleViolation(AssertionError):
    """A kappa bound failed on a sampled instance."""


class BudgetExceeded(ValueError):
    """The requested simulation would draw more coordinates than allowed."""


@dataclass(frozen=True)
class EventCheck:
    """Flags of one 'tangle k contains V_S' event on one dataset."""
    ball_size: int
    clique_nonempty: bool
    majority: bool
    order_ok: bool

    @property
    def success(self):
        return self.clique_nonempty and self.majority and self.order_ok


def _check_setting(spec, labeling, n, trials):
    if n is not None and n != labeling.n:
        raise SpecError(f"n = {n} does not match the labeling's n = {labeling.n}")
    if list(compatible_counts(spec, labeling.n)) != list(labeling.counts):
        raise SpecError(f"Labeling counts {labeling.counts} differ from r_k * n")
    if trials < 1:
        raise SpecError(f"trials must be at least 1, got {trials}")
    budget = config.current().SIMULATION_BUDGET
    if trials * labeling.n * spec.dimension > budget:
        raise BudgetExceeded(
            f"{trials} trials of {labeling.n} points in R^{spec.dimension} exceed {budget} coordinates"
        )


def _radius(model, radius):
    if radius is not None:
        return radius
    if isinstance(model, DeltaNeighborhood):
        return model.delta
    raise SpecError("Kernel-graph events need the width Delta of the clique ball")


def _threshold(cut):
    """c when the cut is (-inf, c] or (c, inf) on the line, else None."""
    if isinstance(cut, Complement):
        cut = cut.inner
    if isinstance(cut, Halfspace) and cut.dimension == 1 and cut.normal[0] > 0:
        return cut.offset
    return None


def check_kappa_bounds(dataset, graph, cut, kappa, trial=None):
    """Hard check of the kappa bounds that apply to this graph and cut.

    Raises:
        OracleViolation: with the trial, the cut and both sides of the inequality.
    """
    model = graph.model
    if isinstance(model, DeltaNeighborhood):
        zone_size = len(vertices_in(dataset, boundary_zone(cut, model.delta)))
        bound = zone_size * zone_size / 4
        name = 'kappa(V_S) <= |V_A|^2 / 4'
    elif isinstance(model, GaussianKernel) and dataset.dimension == 1:
        c = _threshold(cut)
        if c is None:
            return
        decay = np.exp(-(dataset.points[0] - c) ** 2 / (2 * model.bandwidth ** 2)).sum()
        bound = decay * decay / 4
        name = 'kappa(V_S) <= (sum exp(-(x_i - c)^2 / 2 sigma^2))^2 / 4'
    else:
        return
    if kappa > bound * (1 + KAPPA_RELATIVE_TOLERANCE):
        raise OracleViolation(
            f"{name} fails on trial {trial} (seed {dataset.seed}): {kappa!r} > {bound!r} for {cut!r}"
        )


def evaluate_event(dataset, graph, spec, k, radius, cut, check_kappa=True, trial=None):
    """Evaluate the three tangle-membership flags for tangle k and cut S."""
    in_ball = vertices_in(dataset, ball_around_mean(spec, k, radius))
    in_cut = np.zeros(dataset.n, dtype=bool)
    in_cut[vertices_in(dataset, cut)] = True
    kappa = edge_connectivity(graph, in_cut)
    if check_kappa:
        check_kappa_bounds(dataset, graph, cut, kappa, trial)
    size = len(in_ball)
    inside = int(in_cut[in_ball].sum())
    if size >= 2:
        order = clique_order(size, min_clique_weight(graph, in_ball))
    else:
        order = 0.0
    return EventCheck(ball_size=size, clique_nonempty=size >= 2,
                      majority=inside > size - inside, order_ok=kappa < order)


def _run_trials(task, trials, threads):
    threads = threads or config.current().THREADS
    if threads <= 1:
        return [task(t) for t in range(trials)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(task, range(trials)))


def simulate_events(spec, labeling, model, events, trials, seed, radius=None, threads=None,
                    recorder=None, check_kappa=True, graph_dump=None):
    """Run the trials for a list of (k, S) events; a trial succeeds when all events hold.

    An event may carry its own clique radius as a third item (k, S, radius).
    When graph_dump is a path, the graph of trial 0 is written there as an edge list.

    Returns:
        List of TrialOutcome ordered by trial index.
    """
    if radius is not None or all(len(event) < 3 for event in events):
        radius = _radius(model, radius)

    def task(trial):
        sub_seed = trial_seed(seed, trial)
        dataset = sample_dataset(spec, labeling, sub_seed)
        graph = build_graph(dataset, model)
        if graph_dump and trial == 0:
            dump_edge_list(graph, graph_dump)
        checks = [evaluate_event(dataset, graph, spec, k, own[0] if own else radius, cut,
                                 check_kappa, trial)
                  for k, cut, *own in events]
        if not checks:
            # no pairs to separate: the single tangle only has to exist
            ball_size = len(vertices_in(dataset, ball_around_mean(spec, 0, radius)))
            nonempty = ball_size >= 2
            outcome = TrialOutcome(trial, nonempty, True, True, nonempty)
        else:
            outcome = TrialOutcome(
                trial=trial,
                clique_nonempty=all(c.clique_nonempty for c in checks),
                majority=all(c.majority for c in checks),
                order_ok=all(c.order_ok for c in checks),
                success=all(c.success for c in checks),
            )
            ball_size = min(c.ball_size for c in checks)
        if recorder is not None:
            recorder.log_trial(outcome, sub_seed, ball_size)
        return outcome

    outcomes = _run_trials(task, trials, threads)
    if recorder is not None:
        recorder.flush()
    return outcomes


def estimate_event_probability(spec, labeling, model, k, cut, n=None, trials=1000, seed=0,
                               radius=None, threads=None, recorder=None, graph_dump=None):
    """Empirical probability that T_G(V_B) is a tangle containing V_S.

    B is the ball of diameter delta (delta-graphs) or Delta (kernel graphs,
    passed as ``radius``) around mu_k.
    """
    _check_setting(spec, labeling, n, trials)
    outcomes = simulate_events(spec, labeling, model, [(k, cut)], trials, seed, radius,
                               threads, recorder, graph_dump=graph_dump)
    report = summarize_successes([o.success for o in outcomes], seed)
    logger.info("Event k=%d: %d/%d successes (estimate %.4f)", k, report.successes, trials,
                report.estimate)
    return report


def estimate_incomparability(spec, labeling, model, cuts, n=None, trials=1000, seed=0,
                             radius=None, threads=None, recorder=None, radii=None,
                             graph_dump=None):
    """Empirical probability that every pair of clique tangles is split by its cut.

    ``radii`` optionally maps an ordered event (k1, k2) to its own clique width.
    """
    _check_setting(spec, labeling, n, trials)
    events = [(a, cuts.get(a, b), radii[(a, b)]) if radii else (a, cuts.get(a, b))
              for a, b in cuts.events()]
    outcomes = simulate_events(spec, labeling, model, events, trials, seed, radius,
                               threads, recorder, graph_dump=graph_dump)
    report = summarize_successes([o.success for o in outcomes], seed)
    logger.info("Incomparability over %d events: %d/%d successes", len(events),
                report.successes, trials)
    return report


def sample_statistics(spec, labeling, model, region, cut, trials, seed, threads=None):
    """|V_A| and kappa(V_S) for each trial.

    Returns:
        (sizes, kappas) as numpy arrays.
    """
    def task(trial):
        dataset = sample_dataset(spec, labeling, trial_seed(seed, trial))
        graph = build_graph(dataset, model)
        in_cut = np.zeros(dataset.n, dtype=bool)
        in_cut[vertices_in(dataset, cut)] = True
        kappa = edge_connectivity(graph, in_cut)
        check_kappa_bounds(dataset, graph, cut, kappa, trial)
        return len(vertices_in(dataset, region)), kappa

    rows = _run_trials(task, trials, threads)
    return np.array([r[0] for r in rows], dtype=float), np.array([r[1] for r in rows])


def empirical_moments_check(spec, labeling, region, cut, model, n=None, trials=1000, seed=0,
                            threads=None):
    """Compare sampled moments of |V_A| and kappa(V_S) with their closed forms.

    Returns:
        List of MomentRow (quantity, empirical, theoretical, standard error, z).
    """
    _check_setting(spec, labeling, n, trials)
    sizes, kappas = sample_statistics(spec, labeling, model, region, cut, trials, seed, threads)
    moments = moment_formulas(spec, labeling, region, model, cut)
    rows = moment_rows(sizes, kappas, moments, size_at_least_two(spec, labeling, region))
    for row in rows:
        logger.debug("%s: empirical %.6g, closed form %.6g, z %.2f", row.quantity,
                     row.empirical, row.theoretical, row.z_score)
    return rows


def variance_growth(spec, region, cut, model, ns, trials, seed, threads=None):
    """Log-log growth slopes of Var(|V_A|^2) and Var(kappa(V_S)) over sample sizes.

    Returns:
        dict with 'size_squared' and 'kappa' slopes and the per-n variances.
    """
    size_var, kappa_var = [], []
    for n in ns:
        labeling = canonical_labeling(spec, n)
        sizes, kappas = sample_statistics(spec, labeling, model, region, cut, trials, seed,
                                          threads)
        size_var.append(float(np.var(sizes ** 2, ddof=1)))
        kappa_var.append(float(np.var(kappas, ddof=1)))
    return {
        'size_squared': growth_slope(ns, size_var),
        'kappa': growth_slope(ns, kappa_var),
        'ns': list(ns),
        'size_squared_variance': size_var,
        'kappa_variance': kappa_var,
    }
