"""Prox subproblems: closed forms, grid-search oracles, and certification."""

import numpy as np
import pytest

import hyperheat as hh
from hyperheat.prox import ProxProblem, solve_prox

from conftest import grid_search_min, random_connected_graph


def _constrained_problem(g, p, pins, z, h, tau, tie=1e-9):
    n, nv = g.n_free, g.n_vertices
    base = np.zeros(nv)
    base[n:] = pins
    return ProxProblem(
        g.arrays(),
        p,
        nv,
        np.arange(n, dtype=np.int64),
        base,
        np.full(n, 1.0 / tau),
        z[:n] + tau * h[:n],
        tie,
    )


def _golden_section_1d(fun, lo, hi, iters=200):
    inv = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    x1, x2 = b - inv * (b - a), a + inv * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv * (b - a)
            f1 = fun(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv * (b - a)
            f2 = fun(x2)
    return 0.5 * (a + b)


def test_single_edge_quadratic_step_closed_form():
    # minimize (y - 1)^2/2 + y^2/2 over y: golden-section oracle and 1/2
    g = hh.Hypergraph(1, 1, ((0, 1),), (1.0,))
    # value-based search localizes to sqrt(machine eps) at best
    y_oracle = _golden_section_1d(lambda y: 0.5 * (y - 1.0) ** 2 + 0.5 * y**2, -2, 2)
    assert y_oracle == pytest.approx(0.5, abs=1e-6)
    k = hh.ConstraintSet(np.array([0.0]))
    x = hh.prox_step(g, 2.0, np.array([1.0, 0.3]), k, np.zeros(2), 1.0)
    assert x[0] == pytest.approx(0.5, abs=1e-9)
    assert x[1] == 0.0


def test_equilibrium_state_is_fixed_point():
    g = hh.Hypergraph(2, 1, ((0, 1), (1, 2)), (1.0, 2.0))
    k = hh.ConstraintSet(np.array([0.7]))
    z = np.full(3, 0.7)
    for p in (1.0, 2.0, 3.0):
        x = hh.prox_step(g, p, z, k, np.zeros(3), 0.5)
        assert np.allclose(x, z, atol=1e-10)


def test_p1_step_is_soft_threshold():
    g = hh.Hypergraph(1, 1, ((0, 1),), (2.0,))  # weight 2: threshold tau * 2
    k = hh.ConstraintSet(np.array([0.0]))
    x = hh.prox_step(g, 1.0, np.array([0.15, 0.0]), k, np.zeros(2), 0.1)
    # threshold = tau * w = 0.2; |z| = 0.15 < 0.2 -> exactly zero
    assert x[0] == 0.0
    x = hh.prox_step(g, 1.0, np.array([0.5, 0.0]), k, np.zeros(2), 0.1)
    assert x[0] == pytest.approx(0.3, abs=1e-12)


@pytest.mark.parametrize("p", [1.0, 1.5, 2.0, 3.0])
def test_random_small_instances_match_grid_search(p):
    rng = np.random.default_rng(int(p * 10))
    for _ in range(6):
        g = random_connected_graph(rng, nv_min=3, nv_max=4, m_max=2)
        n = g.n_free
        pins = rng.normal(size=g.m_pinned)
        z = rng.normal(size=g.n_vertices)
        h = rng.normal(size=g.n_vertices)
        tau = rng.uniform(0.2, 1.0)
        problem = _constrained_problem(g, p, pins, z, h, tau)
        result = solve_prox(problem, z[:n], 1e-8)
        assert result.residual <= 1e-8

        def objective(y):
            return problem.objective(problem.assemble(y))

        width = 1.0 + np.abs(z).max() + tau * np.abs(h).max() + np.abs(pins).max()
        y_star, f_star = grid_search_min(objective, z[:n], width, rounds=7)
        assert objective(result.x[problem.var_idx]) <= f_star + 1e-10
        assert np.abs(result.x[problem.var_idx] - y_star).max() <= 1e-4


def test_certificate_threshold_enforced_on_kinky_instances():
    rng = np.random.default_rng(42)
    for _ in range(15):
        g = random_connected_graph(rng, nv_min=4, nv_max=8)
        n = g.n_free
        pins = rng.normal(size=g.m_pinned)
        z = np.round(rng.normal(size=g.n_vertices), 1)  # coarse values force ties
        h = np.zeros(g.n_vertices)
        problem = _constrained_problem(g, 1.0, pins, z, h, 0.3)
        result = solve_prox(problem, z[:n], 1e-8)
        assert result.residual <= 1e-8


def test_eta_reported_is_consistent_with_residual():
    g = hh.Hypergraph(2, 1, ((0, 1, 2), (0, 1)), (1.0, 0.5))
    pins = np.array([0.0])
    z = np.array([1.0, 1.0, 0.0])
    h = np.array([0.2, -0.1, 0.0])
    tau = 0.4
    problem = _constrained_problem(g, 2.0, pins, z, h, tau)
    result = solve_prox(problem, z[:2], 1e-10)
    g0 = (result.x[:2] - z[:2]) / tau - h[:2]
    assert np.linalg.norm(g0 + result.eta[:2]) <= 1e-10 + 1e-14
