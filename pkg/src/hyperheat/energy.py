"""Edge-spread energy, its base-polytope subgradients, and sharp constants.

The energy of a state x is (1/p) * sum_e w(e) * spread_e(x)**p where
spread_e(x) = max(x over e) - min(x over e).  Subgradients are built
edge-wise from convex combinations of difference vectors delta_u - delta_v
over the (tie-relaxed) maximizing pairs of each edge.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _selection
from ._backend import kernels
from .errors import ConstraintViolated, DisconnectedGraph, NoConvergence
from .hypergraph import Hypergraph, is_connected

#: relative argmax slack, applied per edge as tie_tol * (1 + spread)
DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class Exponent:
    """Energy exponent p >= 1 together with its Hoelder conjugate."""

    p: float

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError(f"exponent p must be >= 1, got {self.p}")

    @property
    def conjugate(self) -> float:
        return np.inf if self.p == 1.0 else self.p / (self.p - 1.0)

    @property
    def inv_conjugate(self) -> float:
        """1/p', equal to (p - 1)/p; zero when p = 1."""
        return (self.p - 1.0) / self.p


@dataclass
class SubgradientSelection:
    """One subgradient of the energy plus the per-edge weights that built it."""

    eta: np.ndarray
    pairs: tuple  # per edge: (k, 2) int array of (u, v) argmax pairs
    coefficients: tuple  # per edge: (k,) convex weights

    def edge_vector(self, e: int) -> np.ndarray:
        """The stored b_e, a convex combination of delta_u - delta_v."""
        nv = self.eta.shape[0]
        b = np.zeros(nv)
        for (u, v), th in zip(self.pairs[e], self.coefficients[e]):
            b[u] += th
            b[v] -= th
        return b


def _as_state(x, g: Hypergraph) -> np.ndarray:
    x = np.ascontiguousarray(x, dtype=np.float64)
    if x.shape != (g.n_vertices,):
        raise ValueError(f"state must have shape ({g.n_vertices},), got {x.shape}")
    return x


def edge_spread(g: Hypergraph, e: int, x) -> float:
    """max(x over edge e) - min(x over edge e); always >= 0."""
    x = _as_state(x, g)
    vals = x[list(g.edges[e])]
    return float(vals.max() - vals.min())


def energy(g: Hypergraph, p: float, x) -> float:
    """(1/p) * sum_e w(e) * spread_e(x)**p."""
    x = _as_state(x, g)
    arr = g.arrays()
    return kernels.energy_value(x, arr.members, arr.offsets, arr.weights, float(p))


def argmax_pairs(g: Hypergraph, e: int, x, tie_tol: float = 0.0):
    """Ordered pairs (u, v) of edge e with x[u] - x[v] >= spread - tie_tol.

    tie_tol is an absolute slack here; it always contains every exact
    maximizer and is never empty.
    """
    x = _as_state(x, g)
    mem = np.asarray(g.edges[e], dtype=np.int64)
    vals = x[mem]
    hi, lo = vals.max(), vals.min()
    out = []
    for i, u in enumerate(mem):
        for j, v in enumerate(mem):
            if (hi - vals[i]) + (vals[j] - lo) <= tie_tol:
                out.append((int(u), int(v)))
    return out


def _selection_from_theta(g, pdata, theta):
    pairs = []
    coeffs = []
    for e in range(g.n_edges):
        lo, hi = pdata.pair_offsets[e], pdata.pair_offsets[e + 1]
        pairs.append(
            np.stack((pdata.pair_u[lo:hi], pdata.pair_v[lo:hi]), axis=1)
        )
        coeffs.append(theta[lo:hi].copy())
    eta = _selection.full_eta(theta, pdata, g.n_vertices)
    return SubgradientSelection(eta=eta, pairs=tuple(pairs), coefficients=tuple(coeffs))


def subgradient_any(
    g: Hypergraph, p: float, x, tie_tol: float = DEFAULT_TIE_TOL
) -> SubgradientSelection:
    """Deterministic subgradient: per edge, average over all argmax pairs.

    tie_tol is relative, applied per edge as tie_tol * (1 + spread).  For
    p = 1 an edge with zero spread averages its pairs to the zero vector,
    which lies in w(e) * B_e.
    """
    x = _as_state(x, g)
    pdata = _selection.build_pairs(x, g.arrays(), float(p), tie_tol)
    theta = _selection.uniform_theta(pdata)
    return _selection_from_theta(g, pdata, theta)


def subgradient_min_norm(
    g: Hypergraph,
    p: float,
    x,
    tol: float = 1e-12,
    tie_tol: float = DEFAULT_TIE_TOL,
    max_iter: int = 200000,
) -> SubgradientSelection:
    """Euclidean-norm minimizer over the subgradient selection set.

    Solved as a convex QP over the product of per-edge simplices by
    projected gradient with simplex projections, to within tol in the
    squared-norm objective.
    """
    x = _as_state(x, g)
    nv = g.n_vertices
    pdata = _selection.build_pairs(x, g.arrays(), float(p), tie_tol)
    theta, _, res = _selection.min_norm_selection(
        np.zeros(nv),
        _selection.identity_rows(nv),
        pdata,
        target=np.sqrt(tol),
        max_iter=max_iter,
    )
    sel = _selection_from_theta(g, pdata, theta)
    any_norm = float(
        np.linalg.norm(
            _selection.full_eta(_selection.uniform_theta(pdata), pdata, nv)
        )
    )
    if res > any_norm + np.sqrt(tol) + 1e-9:
        raise NoConvergence(res, max_iter)
    return sel


def poincare_constant(g: Hypergraph, p: float) -> float:
    """n * (n+m)**(1/p') * (min_e w(e))**(-1/p), with (n+m)**0 = 1 at p = 1."""
    if not is_connected(g):
        raise DisconnectedGraph("Poincare constant requires a connected hypergraph")
    exp = Exponent(float(p))
    n = g.n_free
    nv = g.n_vertices
    return float(n * nv**exp.inv_conjugate * g.min_weight() ** (-1.0 / exp.p))


@dataclass(frozen=True)
class PoincareCheck:
    lhs: float
    rhs: float
    holds: bool


def poincare_check(g: Hypergraph, p: float, x, a_values) -> PoincareCheck:
    """Evaluate sum_k |x_k| <= C * energy**(1/p) + n * min_i |a_i| for x pinned at a.

    Raises ConstraintViolated when the pinned components of x do not match
    a_values.
    """
    x = _as_state(x, g)
    a_values = np.asarray(a_values, dtype=np.float64)
    n = g.n_free
    if a_values.shape != (g.m_pinned,):
        raise ValueError(f"expected {g.m_pinned} pinned values")
    if not np.allclose(x[n:], a_values, rtol=0.0, atol=1e-12):
        raise ConstraintViolated("pinned components of x do not equal a_values")
    c = poincare_constant(g, p)
    lhs = float(np.abs(x[:n]).sum())
    rhs = float(c * energy(g, p, x) ** (1.0 / p) + n * np.abs(a_values).min())
    holds = lhs <= rhs + 1e-12 * (1.0 + abs(rhs))
    return PoincareCheck(lhs=lhs, rhs=rhs, holds=holds)
