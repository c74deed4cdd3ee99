"""Checks run by the verify command.

Every check reports (name, cases, failures); the suite passes when no check
has failures.
"""

import logging
from dataclasses import dataclass

import numpy as np

from engine.graph import build_graph, edge_connectivity, from_edges, vertices_in
from engine.mixture import canonical_labeling, pair_spec, sample_dataset, trial_seed
from engine.regions import Halfspace, Interval, complement
from engine.simulator import OracleViolation, check_kappa_bounds, empirical_moments_check
from engine.tangle_oracle import incomparable, materialize_clique_tangle, verify_tangle_axioms
from models import DeltaNeighborhood, GaussianKernel

logger = logging.getLogger(__name__)

Z_LIMIT = 4.0
CHECKED_MOMENTS = ('E|V_A|', 'Var|V_A|', 'Pr(|V_A| >= 2)')


@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    failures: int
    detail: str = ''

    @property
    def passed(self):
        return self.failures == 0


def planted_clique_graph(rng, max_vertices=9):
    """Random weighted graph with a planted clique W.

    Returns:
        (graph, W) with |W| >= 2.
    """
    n = int(rng.integers(3, max_vertices + 1))
    size = int(rng.integers(2, n + 1))
    clique = sorted(rng.choice(n, size=size, replace=False).tolist())
    members = set(clique)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if i in members and j in members:
                edges.append((i, j, float(rng.uniform(0.5, 1.5))))
            elif rng.random() < 0.3:
                edges.append((i, j, float(rng.uniform(0.1, 1.0))))
    return from_edges(n, edges), clique


def check_clique_tangles(graphs, seed):
    rng = np.random.default_rng([seed, 1])
    failures, detail = 0, ''
    for case in range(graphs):
        graph, clique = planted_clique_graph(rng)
        result = verify_tangle_axioms(graph, materialize_clique_tangle(graph, clique))
        if not result:
            failures += 1
            detail = detail or f"case {case}: {result.axiom} fails, witness {result.witness}"
    return CheckResult('clique tangle axioms', graphs, failures, detail)


def check_incomparability_symmetry(graphs, seed):
    rng = np.random.default_rng([seed, 2])
    failures = cases = 0
    for _ in range(graphs):
        graph, clique = planted_clique_graph(rng)
        outside = [(int(i), int(j)) for i, j in zip(graph.heads, graph.tails)
                   if i not in clique and j not in clique]
        if not outside:
            continue
        cases += 1
        other = list(outside[0])
        first = materialize_clique_tangle(graph, clique)
        second = materialize_clique_tangle(graph, other)
        if incomparable(first, second)[0] != incomparable(second, first)[0]:
            failures += 1
    return CheckResult('incomparability symmetry', cases, failures)


def _kappa_instance(rng, instance, seed):
    lam = float(rng.uniform(1.0, 7.0))
    n = 2 * int(rng.integers(2, 40))
    spec = pair_spec(0.5, 1.0, lam)
    dataset = sample_dataset(spec, canonical_labeling(spec, n), trial_seed(seed, instance))
    c = float(rng.uniform(-1.0, lam + 1.0))
    cut = Halfspace((1.0,), c)
    if rng.random() < 0.5:
        cut = complement(cut)
    if instance % 2:
        model = GaussianKernel(1.0)
    else:
        model = DeltaNeighborhood(float(rng.uniform(0.1, 2.0)))
    return dataset, build_graph(dataset, model), cut


def check_kappa_bounds_suite(instances, seed):
    rng = np.random.default_rng([seed, 3])
    failures, detail = 0, ''
    for instance in range(instances):
        dataset, graph, cut = _kappa_instance(rng, instance, seed)
        kappa = edge_connectivity(graph, vertices_in(dataset, cut))
        try:
            check_kappa_bounds(dataset, graph, cut, kappa, instance)
        except OracleViolation as exc:
            failures += 1
            detail = detail or str(exc)
    return CheckResult('kappa bounds', instances, failures, detail)


def check_moments(trials, seed, lam=5.0, n=100):
    spec = pair_spec(0.5, 1.0, lam)
    labeling = canonical_labeling(spec, n)
    rows = empirical_moments_check(spec, labeling, Interval(1.0, 2.0), Halfspace((1.0,), lam / 2),
                                   DeltaNeighborhood(1.0), trials=trials, seed=seed)
    bad = [row for row in rows if row.quantity in CHECKED_MOMENTS and abs(row.z_score) > Z_LIMIT]
    detail = '; '.join(f"{row.quantity} z={row.z_score:.2f}" for row in bad)
    return CheckResult('moment formulas', len(CHECKED_MOMENTS), len(bad), detail)


def run_suite(graphs=200, instances=1000, trials=2000, seed=0):
    """Run every check.

    Returns:
        List of CheckResult in a fixed order.
    """
    results = [
        check_clique_tangles(graphs, seed),
        check_incomparability_symmetry(graphs, seed),
        check_kappa_bounds_suite(instances, seed),
    ]
    if trials:
        results.append(check_moments(trials, seed))
    for result in results:
        level = logging.INFO if result.passed else logging.ERROR
        logger.log(level, "%s: %d failures in %d cases %s", result.name, result.failures,
                   result.cases, result.detail)
    return results
