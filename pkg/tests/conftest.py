"""Shared fixtures: random instance generators and brute-force oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

import hyperheat as hh


def random_connected_graph(
    rng, nv_min=3, nv_max=8, m_max=None, edge_hi=None, max_edge_size=4
):
    """Connected hypergraph with mixed edge sizes and weights in [0.5, 2]."""
    while True:
        nv = int(rng.integers(nv_min, nv_max + 1))
        m_cap = m_max if m_max is not None else max(2, nv // 2)
        m = int(rng.integers(1, m_cap + 1))
        n = nv - m
        if n < 1:
            continue
        hi = edge_hi if edge_hi is not None else nv + 3
        ne = int(rng.integers(max(1, nv - 2), hi))
        edges = []
        for _ in range(ne):
            size = int(rng.integers(2, min(nv, max_edge_size) + 1))
            edges.append(
                tuple(sorted(rng.choice(nv, size=size, replace=False).tolist()))
            )
        g = hh.Hypergraph(
            n_free=n,
            m_pinned=m,
            edges=tuple(edges),
            weights=tuple(rng.uniform(0.5, 2.0, ne).tolist()),
        )
        if hh.is_connected(g):
            return g


def grid_search_min(fun, center, halfwidth, rounds=6, pts=13):
    """Coarse-to-fine grid minimizer for smooth or kinked convex functions.

    Keeps a two-cell margin when refining, which is safe for convex
    objectives; resolution shrinks by a factor 4/(pts-1) per round.
    """
    center = np.asarray(center, dtype=np.float64)
    dim = center.shape[0]
    if dim == 0:
        return center, fun(center)
    width = float(halfwidth)
    best_x = center.copy()
    best_f = fun(best_x)
    for _ in range(rounds):
        axes = [np.linspace(c - width, c + width, pts) for c in best_x]
        for combo in itertools.product(*axes):
            x = np.array(combo)
            f = fun(x)
            if f < best_f:
                best_f = f
                best_x = x
        width *= 2.0 / (pts - 1)
    return best_x, best_f


def connectivity_oracle(g: hh.Hypergraph) -> bool:
    """Transitive closure of the pairwise 'share an edge' relation."""
    nv = g.n_vertices
    reach = np.eye(nv, dtype=bool)
    for e in g.edges:
        for u in e:
            for v in e:
                reach[u, v] = True
    for _ in range(nv):
        reach = reach | (reach @ reach)
    return bool(reach.all())


def random_admissible_state(rng, g, a_values, scale=1.5):
    return np.concatenate((rng.normal(scale=scale, size=g.n_free), a_values))


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Compile the jitted kernels once so timed tests measure solve time."""
    g = hh.Hypergraph(2, 1, ((0, 1, 2), (0, 1)), (1.0, 0.5))
    a = hh.Schedule.constant([0.0])
    cfg = hh.SolverConfig(p=1.0, dt=0.25, t_end=0.5)
    hh.implicit_euler(g, np.array([1.0, -0.5, 0.0]), a, None, cfg)
    hh.subgradient_min_norm(g, 2.0, np.array([1.0, 0.0, 0.0]))
    yield
