"""Tests for the verification suite."""

import numpy as np

from engine.graph import min_clique_weight
from engine.verification import (
    CheckResult, check_clique_tangles, check_incomparability_symmetry, check_kappa_bounds_suite,
    planted_clique_graph, run_suite,
)


def test_planted_clique_is_a_clique():
    rng = np.random.default_rng(0)
    for _ in range(20):
        graph, clique = planted_clique_graph(rng, max_vertices=7)
        assert 2 <= len(clique) <= graph.n <= 7
        assert min_clique_weight(graph, clique, require_clique=True) >= 0.5


def test_check_result_passes_without_failures():
    assert CheckResult('x', 3, 0).passed
    assert not CheckResult('x', 3, 1, 'detail').passed


def test_individual_checks():
    assert check_clique_tangles(10, seed=1).passed
    assert check_incomparability_symmetry(10, seed=1).passed
    result = check_kappa_bounds_suite(50, seed=1)
    assert result.cases == 50
    assert result.passed


def test_small_suite_passes():
    results = run_suite(graphs=8, instances=40, trials=300, seed=2)
    assert [r.name for r in results][-1] == 'moment formulas'
    assert all(r.passed for r in results), [r.detail for r in results if not r.passed]


def test_suite_without_moments():
    results = run_suite(graphs=4, instances=10, trials=0)
    assert len(results) == 3
