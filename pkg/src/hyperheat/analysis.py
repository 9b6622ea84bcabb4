"""Executable forms of the quantitative estimates: continuous dependence,
decay regimes, limit stationarity, and penalty-convergence studies."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .constraint import Schedule
from .energy import energy
from .errors import GridMismatch, NonZeroData, NotConverged
from .hypergraph import Hypergraph
from .solver import (
    SolverConfig,
    StationaryPoint,
    Trajectory,
    _stationarity_residual,
    implicit_euler,
    with_config,
    yosida_trajectory,
)


def fit_line(t, y):
    """Least-squares line fit; returns (slope, intercept, r_squared)."""
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    a_mat = np.stack((t, np.ones_like(t)), axis=1)
    coef, *_ = np.linalg.lstsq(a_mat, y, rcond=None)
    resid = y - a_mat @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return float(coef[0]), float(coef[1]), r2


@dataclass(frozen=True)
class DependenceReport:
    lhs: float
    rhs: float
    gamma_used: float
    holds: bool
    allowance: float


def dependence_gamma(g: Hypergraph, p: float) -> float:
    """(2**(p+1) * #E * max_e w(e)) ** (1/2)."""
    return float(np.sqrt(2.0 ** (p + 1.0) * g.n_edges * g.max_weight()))


def dependence_check(
    g: Hypergraph,
    p: float,
    run1: Trajectory,
    a1: Schedule,
    h1: Schedule | None,
    run2: Trajectory,
    a2: Schedule,
    h2: Schedule | None,
) -> DependenceReport:
    """Supremum distance of free coordinates against the data-dependence bound.

    rhs = initial free distance + int ||h1 - h2|| dt
        + gamma * (sup||x1||**((p-1)/2) + sup||x2||**((p-1)/2)) * (int ||a1 - a2|| dt)**(1/2)

    Integrals use the trapezoid rule on the shared grid, inflated by the
    grid-error allowance 10 * dt * (integrand sup) so discretization cannot
    fail a true inequality; the total inflation is reported.
    """
    grid = run1.times
    if run2.times.shape != grid.shape or np.abs(run2.times - grid).max() > 1e-12:
        raise GridMismatch("trajectories must share one time grid")
    n = g.n_free
    nv = g.n_vertices
    zero = Schedule.constant(np.zeros(nv))
    h1 = h1 if h1 is not None else zero
    h2 = h2 if h2 is not None else zero

    diff_free = run1.states[:, :n] - run2.states[:, :n]
    lhs = float(np.sqrt((diff_free**2).sum(axis=1)).max())
    init = float(np.linalg.norm(diff_free[0]))

    dh = np.array([np.linalg.norm(h1.value(t) - h2.value(t)) for t in grid])
    da = np.array([np.linalg.norm(a1.value(t) - a2.value(t)) for t in grid])
    dt_max = float(np.diff(grid).max())
    err_h = 10.0 * dt_max * float(dh.max())
    err_a = 10.0 * dt_max * float(da.max())
    int_h = float(np.trapezoid(dh, grid)) + err_h
    int_a = float(np.trapezoid(da, grid)) + err_a

    gamma = dependence_gamma(g, p)
    sup1 = float(np.sqrt((run1.states**2).sum(axis=1)).max())
    sup2 = float(np.sqrt((run2.states**2).sum(axis=1)).max())
    pow_factor = sup1 ** ((p - 1.0) / 2.0) + sup2 ** ((p - 1.0) / 2.0)
    rhs = init + int_h + gamma * pow_factor * np.sqrt(int_a)
    allowance = err_h + gamma * pow_factor * (
        np.sqrt(int_a) - np.sqrt(max(int_a - err_a, 0.0))
    )
    return DependenceReport(
        lhs=lhs,
        rhs=float(rhs),
        gamma_used=gamma,
        holds=bool(lhs <= rhs),
        allowance=float(allowance),
    )


@dataclass(frozen=True)
class DecayReport:
    regime: str  # finite_extinction | exponential | algebraic
    fitted_rate: float
    extinction_time: float | None
    gamma_fit: float
    r_squared: float


def decay_study(
    g: Hypergraph,
    p: float,
    x0,
    cfg: SolverConfig,
    a: Schedule | None = None,
    h: Schedule | None = None,
    atol: float = 1e-10,
    tail_fraction: float = 0.5,
) -> DecayReport:
    """Run the zero-data flow and fit the norm decay in the regime set by p.

    p < 2 reaches zero in finite time; p = 2 decays exponentially; p > 2
    shows affine growth of ||x||**(-(p-2)).
    """
    for s, name in ((a, "a"), (h, "h")):
        if s is not None and np.abs(s.samples).max() > 0.0:
            raise NonZeroData(f"decay study requires {name} identically zero")
    m = g.m_pinned
    a_run = Schedule.constant(np.zeros(m))
    run = implicit_euler(g, np.asarray(x0, dtype=np.float64), a_run, None, cfg)
    t = run.times
    norms = np.sqrt((run.states**2).sum(axis=1))

    below = norms <= atol
    extinction_time = float(t[int(np.argmax(below))]) if below.any() else None

    if p < 2.0:
        sel = norms > atol
        if extinction_time is not None:
            sel &= t <= extinction_time
        y = norms[sel] ** (2.0 - p)
        slope, _, r2 = fit_line(t[sel], y)
        return DecayReport(
            regime="finite_extinction",
            fitted_rate=slope,
            extinction_time=extinction_time,
            gamma_fit=-slope,
            r_squared=r2,
        )
    tail = (t >= (1.0 - tail_fraction) * t[-1]) & (norms > max(atol, 1e-280))
    if p == 2.0:
        slope, _, r2 = fit_line(t[tail], np.log(norms[tail]))
        return DecayReport(
            regime="exponential",
            fitted_rate=slope,
            extinction_time=None,
            gamma_fit=-slope,
            r_squared=r2,
        )
    slope, _, r2 = fit_line(t[tail], norms[tail] ** (-(p - 2.0)))
    return DecayReport(
        regime="algebraic",
        fitted_rate=slope,
        extinction_time=None,
        gamma_fit=slope,
        r_squared=r2,
    )


def omega_limit(
    run: Trajectory,
    a_inf,
    h_inf,
    g: Hypergraph,
    p: float,
    tol: float,
    tie_tol: float = 1e-9,
    tail_fraction: float = 0.1,
) -> StationaryPoint:
    """Declare and certify the long-time limit of a trajectory.

    The tail oscillation over the last tail_fraction of the horizon must not
    exceed tol, and the limit must be stationary for the autonomous problem
    with data (a_inf, h_inf): the min-norm reduced subgradient of
    energy - h_inf . x at the limit stays below tol.
    """
    a_inf = np.asarray(a_inf, dtype=np.float64)
    h_inf = np.asarray(h_inf, dtype=np.float64)
    t = run.times
    window = t >= t[-1] - tail_fraction * (t[-1] - t[0])
    x_last = run.states[-1]
    osc = float(
        np.sqrt(((run.states[window] - x_last) ** 2).sum(axis=1)).max()
    )
    if osc > tol:
        raise NotConverged(osc)
    x_inf = np.concatenate((x_last[: run.n_free], a_inf))
    res = _stationarity_residual(g, float(p), x_inf, h_inf, tie_tol)
    if res > tol:
        raise NotConverged(res)
    return StationaryPoint(
        x_inf=x_inf, phi_value=energy(g, p, x_inf), stationarity_residual=res
    )


@dataclass(frozen=True)
class YosidaRow:
    lam: float
    sup_pin_deviation: float  # sup_t euclidean pin deviation
    sup_pin_deviation_sq: float  # sup_t summed squared deviation
    sup_distance_to_reference: float
    deviation_bound: float  # measured a-priori bound, times lambda
    bound_holds: bool


@dataclass(frozen=True)
class YosidaStudy:
    rows: tuple[YosidaRow, ...]
    deviation_order: float  # log-log slope of sup deviation vs lambda
    distance_monotone: bool


def _exact_integral_norm_derivative(s: Schedule, t_end: float) -> float:
    """int_0^T ||s'(t)|| dt, exact for the piecewise-linear schedule."""
    if s.is_constant:
        return 0.0
    total = 0.0
    for i in range(s.times.shape[0] - 1):
        t0, t1 = s.times[i], min(s.times[i + 1], t_end)
        if t1 <= t0:
            continue
        slope = (s.samples[i + 1] - s.samples[i]) / (s.times[i + 1] - s.times[i])
        total += float(np.linalg.norm(slope)) * (t1 - t0)
        if s.times[i + 1] >= t_end:
            break
    return total


def _integral_sq_h_minus_da(h: Schedule, a: Schedule, n_free, t_end) -> float:
    """int ||h(t) - a'(t)||^2 dt with a' embedded as zeros on free coordinates.

    Simpson per union segment is exact: the integrand is piecewise quadratic.
    """
    knots = {0.0, t_end}
    for s in (h, a):
        if not s.is_constant:
            knots.update(float(x) for x in s.times if 0.0 < x < t_end)
    knots = sorted(knots)

    def integrand(t):
        da = a.derivative(t)
        v = h.value(t).copy()
        v[n_free:] -= da
        return float(v @ v)

    total = 0.0
    for t0, t1 in zip(knots[:-1], knots[1:]):
        mid = 0.5 * (t0 + t1)
        # derivative convention returns the right slope at knots; sample the
        # segment interior to stay on one piece
        eps = 1e-9 * (t1 - t0)
        total += (
            (t1 - t0)
            / 6.0
            * (integrand(t0 + eps) + 4.0 * integrand(mid) + integrand(t1 - eps))
        )
    return total


def yosida_study(
    g: Hypergraph,
    x0,
    a: Schedule,
    h: Schedule | None,
    cfg: SolverConfig,
    lambdas,
) -> YosidaStudy:
    """Penalty-convergence table for a decreasing list of lambda values.

    Per lambda: the sup pin deviation (and its square, checked against the
    measured a-priori bound, linear in lambda) plus the sup distance to the
    constrained reference trajectory.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    reference = implicit_euler(g, x0, a, h, cfg)
    n = g.n_free
    nv = g.n_vertices
    h_eff = h if h is not None else Schedule.constant(np.zeros(nv))
    phi0 = energy(g, cfg.p, x0)
    int_da = _exact_integral_norm_derivative(a, cfg.t_end)
    int_sq = _integral_sq_h_minus_da(h_eff, a, n, cfg.t_end)

    rows = []
    for lam in lambdas:
        traj = yosida_trajectory(g, x0, a, h, with_config(cfg, lam=float(lam)))
        avals = np.stack([a.value(t) for t in traj.times])
        dev_sq = ((traj.states[:, n:] - avals) ** 2).sum(axis=1)
        sup_dev_sq = float(dev_sq.max())
        sup_dev = float(np.sqrt(dev_sq).max())
        dist = float(
            np.sqrt(((traj.states - reference.states) ** 2).sum(axis=1)).max()
        )
        sup_x = float(np.sqrt((traj.states**2).sum(axis=1)).max())
        sup_phi = max(energy(g, cfg.p, s) for s in traj.states)
        sup_eta = float(np.sqrt((traj.eta**2).sum(axis=1)).max())
        c1 = max(sup_x, sup_phi + sup_eta)
        bound = 2.0 * phi0 + 2.0 * c1 * int_da + int_sq
        rows.append(
            YosidaRow(
                lam=float(lam),
                sup_pin_deviation=sup_dev,
                sup_pin_deviation_sq=sup_dev_sq,
                sup_distance_to_reference=dist,
                deviation_bound=float(lam) * bound,
                bound_holds=bool(sup_dev_sq <= float(lam) * bound),
            )
        )

    lams = np.array([r.lam for r in rows])
    devs = np.array([r.sup_pin_deviation for r in rows])
    if (devs > 0).all():
        order, _, _ = fit_line(np.log(lams), np.log(devs))
    else:
        order = float("nan")
    by_lam = sorted(rows, key=lambda r: -r.lam)
    dists = [r.sup_distance_to_reference for r in by_lam]
    monotone = all(
        d_small <= d_big + 1e-12
        for d_big, d_small in zip(dists, dists[1:])
    )
    return YosidaStudy(
        rows=tuple(rows), deviation_order=float(order), distance_monotone=monotone
    )
