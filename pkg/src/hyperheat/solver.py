"""Time integration of the constrained diffusion by implicit Euler prox steps,
the penalized (Moreau-Yosida) scheme, steady states, and the linear oracle.

Each backward step solves a strongly convex prox subproblem through
:mod:`hyperheat.prox`.  The recovered sections make the discrete inclusion

    (x_k - x_{k-1}) / dt + eta_k + xi_k = h(t_k)

exact by construction: eta_k is the subgradient selection minimizing the
step residual and xi_k is defined as the remainder, so the vanishing of
xi's first n components is a genuine correctness check rather than an
identity.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .constraint import ConstraintSet, Schedule, lift
from .energy import energy
from .errors import (
    DisconnectedGraph,
    InitialStateNotAdmissible,
    NoConvergence,
    NotALinearCase,
)
from .hypergraph import Hypergraph, is_connected, validate
from .prox import ProxProblem, ProxResult, solve_prox
from . import _selection


@dataclass(frozen=True)
class SolverConfig:
    p: float
    dt: float
    t_end: float
    prox_tol: float = 1e-8
    prox_max_iter: int = 60
    lam: float | None = None
    tie_tol: float = 1e-9

    def __post_init__(self):
        if not (self.p >= 1.0):
            raise ValueError("p must be >= 1")
        if not (self.dt > 0.0 and self.t_end > 0.0 and self.prox_tol > 0.0):
            raise ValueError("dt, t_end, prox_tol must be positive")
        if self.lam is not None and not (self.lam > 0.0):
            raise ValueError("lambda must be positive when given")


@dataclass
class Trajectory:
    """Grid, states, and per-step recovered sections.

    Row 0 of eta, xi, residuals is zero; step k >= 1 refers to the step
    ending at times[k].
    """

    times: np.ndarray
    states: np.ndarray
    eta: np.ndarray
    xi: np.ndarray
    residuals: np.ndarray
    n_free: int

    @property
    def n_steps(self) -> int:
        return self.times.shape[0] - 1

    def final_state(self) -> np.ndarray:
        return self.states[-1].copy()

    def free_states(self) -> np.ndarray:
        return self.states[:, : self.n_free]


@dataclass(frozen=True)
class StationaryPoint:
    x_inf: np.ndarray
    phi_value: float
    stationarity_residual: float


@dataclass(frozen=True)
class UnboundedBelow:
    """Certificate that the steady-state objective has no minimizer."""

    ray: np.ndarray
    recession_value: float  # energy(ray) - h . ray, negative along the ray


def time_grid(t_end: float, dt: float, *schedules) -> np.ndarray:
    """Uniform dt grid on [0, t_end] plus every schedule knot inside."""
    n_whole = int(np.floor(t_end / dt + 1e-9))
    pts = [k * dt for k in range(n_whole + 1)]
    if pts[-1] < t_end - 1e-12 * max(1.0, t_end):
        pts.append(t_end)
    else:
        pts[-1] = t_end
    for s in schedules:
        if s is not None:
            pts.extend(s.knots_within(t_end))
    pts = np.array(sorted(pts))
    keep = [0]
    tol = 1e-12 * max(1.0, t_end)
    for i in range(1, pts.shape[0]):
        if pts[i] - pts[keep[-1]] > tol:
            keep.append(i)
    grid = pts[keep]
    grid[0] = 0.0
    grid[-1] = t_end
    return grid


def _default_config(cfg, p) -> SolverConfig:
    if cfg is None:
        return SolverConfig(p=p, dt=1.0, t_end=1.0)
    return cfg


def _prox_problem_constrained(g, p, z, kset, h_t, tau, tie_tol):
    n = g.n_free
    nv = g.n_vertices
    base = np.zeros(nv)
    base[n:] = kset.a_values
    d = np.full(n, 1.0 / tau)
    c = z[:n] + tau * h_t[:n]
    return ProxProblem(
        g.arrays(), p, nv, np.arange(n, dtype=np.int64), base, d, c, tie_tol
    )


def prox_step(g: Hypergraph, p, z, kset: ConstraintSet, h_t, tau, cfg=None):
    """Minimizer over the constraint set of ||x - z||^2/(2 tau) + energy - h . x."""
    cfg = _default_config(cfg, p)
    z = np.asarray(z, dtype=np.float64)
    h_t = np.asarray(h_t, dtype=np.float64)
    problem = _prox_problem_constrained(g, p, z, kset, h_t, tau, cfg.tie_tol)
    result = solve_prox(
        problem, z[: g.n_free], cfg.prox_tol, max_rounds=cfg.prox_max_iter
    )
    return result.x


def _zero_schedule(dim) -> Schedule:
    return Schedule.constant(np.zeros(dim))


def _check_admissible(x0, a0, n, atol=1e-9):
    if np.abs(x0[n:] - a0).max() > atol * (1.0 + np.abs(a0).max()):
        raise InitialStateNotAdmissible(
            "pinned components of x0 must equal the pin schedule at t = 0"
        )


def implicit_euler(
    g: Hypergraph, x0, a: Schedule, h: Schedule | None, cfg: SolverConfig
) -> Trajectory:
    """Backward-Euler integration of the pinned diffusion problem."""
    validate(g)
    if not is_connected(g):
        raise DisconnectedGraph("solver requires a connected hypergraph")
    n, nv = g.n_free, g.n_vertices
    if h is None:
        h = _zero_schedule(nv)
    x0 = np.asarray(x0, dtype=np.float64)
    _check_admissible(x0, a.value(0.0), n)

    grid = time_grid(cfg.t_end, cfg.dt, a, h)
    nk = grid.shape[0]
    states = np.zeros((nk, nv))
    etas = np.zeros((nk, nv))
    xis = np.zeros((nk, nv))
    residuals = np.zeros(nk)
    states[0] = x0
    states[0, n:] = a.value(0.0)

    for k in range(1, nk):
        t = grid[k]
        tau = grid[k] - grid[k - 1]
        kset = ConstraintSet(a.value(t))
        hv = h.value(t)
        z = states[k - 1]
        problem = _prox_problem_constrained(g, cfg.p, z, kset, hv, tau, cfg.tie_tol)
        result = solve_prox(
            problem, z[:n], cfg.prox_tol, max_rounds=cfg.prox_max_iter
        )
        states[k] = result.x
        etas[k] = result.eta
        xis[k] = hv - (states[k] - z) / tau - result.eta
        residuals[k] = result.residual

    return Trajectory(
        times=grid, states=states, eta=etas, xi=xis, residuals=residuals, n_free=n
    )


def implicit_euler_unconstrained(
    g: Hypergraph, x0, h: Schedule | None, cfg: SolverConfig
) -> Trajectory:
    """Backward-Euler flow with no pinned coordinates (all vertices free)."""
    validate(g, allow_unpinned=True)
    nv = g.n_vertices
    if h is None:
        h = _zero_schedule(nv)
    x0 = np.asarray(x0, dtype=np.float64)
    grid = time_grid(cfg.t_end, cfg.dt, h)
    nk = grid.shape[0]
    states = np.zeros((nk, nv))
    etas = np.zeros((nk, nv))
    xis = np.zeros((nk, nv))
    residuals = np.zeros(nk)
    states[0] = x0
    var_idx = np.arange(nv, dtype=np.int64)
    arrays = g.arrays()
    for k in range(1, nk):
        tau = grid[k] - grid[k - 1]
        hv = h.value(grid[k])
        z = states[k - 1]
        problem = ProxProblem(
            arrays,
            cfg.p,
            nv,
            var_idx,
            np.zeros(nv),
            np.full(nv, 1.0 / tau),
            z + tau * hv,
            cfg.tie_tol,
        )
        result = solve_prox(problem, z, cfg.prox_tol, max_rounds=cfg.prox_max_iter)
        states[k] = result.x
        etas[k] = result.eta
        xis[k] = hv - (states[k] - z) / tau - result.eta
        residuals[k] = result.residual
    return Trajectory(
        times=grid, states=states, eta=etas, xi=xis, residuals=residuals,
        n_free=g.n_free,
    )


def yosida_trajectory(
    g: Hypergraph, x0, a: Schedule, h: Schedule | None, cfg: SolverConfig
) -> Trajectory:
    """Implicit Euler for the penalized, unconstrained inclusion.

    The constraint indicator is replaced by its Moreau envelope
    ||x - Proj x||^2 / (2 lambda); every coordinate is a free variable and
    xi_k = (x_k - Proj x_k) / lambda is the penalty section.
    """
    if cfg.lam is None:
        raise ValueError("yosida_trajectory requires cfg.lam")
    validate(g)
    if not is_connected(g):
        raise DisconnectedGraph("solver requires a connected hypergraph")
    n, nv = g.n_free, g.n_vertices
    lam = cfg.lam
    if h is None:
        h = _zero_schedule(nv)
    x0 = np.asarray(x0, dtype=np.float64)

    grid = time_grid(cfg.t_end, cfg.dt, a, h)
    nk = grid.shape[0]
    states = np.zeros((nk, nv))
    etas = np.zeros((nk, nv))
    xis = np.zeros((nk, nv))
    residuals = np.zeros(nk)
    states[0] = x0
    var_idx = np.arange(nv, dtype=np.int64)
    arrays = g.arrays()

    for k in range(1, nk):
        t = grid[k]
        tau = grid[k] - grid[k - 1]
        av = a.value(t)
        hv = h.value(t)
        z = states[k - 1]
        d = np.full(nv, 1.0 / tau)
        c = z + tau * hv
        d[n:] = 1.0 / tau + 1.0 / lam
        c[n:] = (z[n:] / tau + av / lam + hv[n:]) / d[n:]
        problem = ProxProblem(
            arrays, cfg.p, nv, var_idx, np.zeros(nv), d, c, cfg.tie_tol
        )
        result = solve_prox(problem, z, cfg.prox_tol, max_rounds=cfg.prox_max_iter)
        states[k] = result.x
        etas[k] = result.eta
        xis[k, n:] = (states[k, n:] - av) / lam
        residuals[k] = result.residual

    return Trajectory(
        times=grid, states=states, eta=etas, xi=xis, residuals=residuals, n_free=n
    )


def _stationarity_residual(g, p, x, h_inf, tie_tol):
    """Min-norm of the reduced subgradient of energy - h . x over free coords."""
    n = g.n_free
    rows = np.full(g.n_vertices, -1, dtype=np.int64)
    rows[:n] = np.arange(n, dtype=np.int64)
    pairs = _selection.build_pairs(x, g.arrays(), p, tie_tol, coef_slack=True)
    _, _, res = _selection.min_norm_selection(
        -np.asarray(h_inf, dtype=np.float64)[:n], rows, pairs, target=0.0
    )
    return res


def steady_state(
    g: Hypergraph,
    p,
    a_inf,
    h_inf,
    tol: float = 1e-8,
    x_init=None,
    max_outer: int = 80,
    tie_tol: float = 1e-9,
):
    """Minimize energy(x) - h_inf . x over the pins a_inf by proximal point steps.

    Returns a StationaryPoint, or an UnboundedBelow certificate when p = 1
    and the objective decreases without bound along a ray.
    """
    validate(g)
    if not is_connected(g):
        raise DisconnectedGraph("steady state requires a connected hypergraph")
    p = float(p)
    n, nv = g.n_free, g.n_vertices
    a_inf = np.asarray(a_inf, dtype=np.float64)
    h_inf = np.asarray(h_inf, dtype=np.float64)
    kset = ConstraintSet(a_inf)
    if x_init is None:
        fill = a_inf.mean() if a_inf.size else 0.0
        x = lift(np.full(n, fill), kset)
    else:
        x = np.asarray(x_init, dtype=np.float64).copy()
        x[n:] = a_inf
    x_start = x.copy()
    scale0 = 1.0 + np.abs(x_start).max() + np.abs(a_inf).max() if a_inf.size else 1.0

    tau = 1.0
    res = np.inf
    for outer in range(max_outer):
        problem = _prox_problem_constrained(g, p, x, kset, h_inf, tau, tie_tol)
        result = solve_prox(problem, x[:n], min(tol, 1e-8) * 0.5)
        move = float(np.linalg.norm(result.x - x)) / tau
        x = result.x

        if np.abs(x - x_start).max() > 1e4 * scale0:
            ray = x - x_start
            ray = ray / np.linalg.norm(ray)
            snapped = np.where(np.abs(ray) < 1e-6, 0.0, ray)
            if np.linalg.norm(snapped) > 0:
                snapped = snapped / np.linalg.norm(snapped)
                if _recession_value(g, snapped, h_inf) < _recession_value(
                    g, ray, h_inf
                ):
                    ray = snapped
            rec = _recession_value(g, ray, h_inf)
            if p == 1.0 and rec < -1e-12 * (1.0 + np.abs(h_inf).max()):
                return UnboundedBelow(ray=ray, recession_value=rec)

        res = _stationarity_residual(g, p, x, h_inf, tie_tol)
        if res <= tol and move <= tol * (1.0 + np.abs(x).max()):
            return StationaryPoint(
                x_inf=x,
                phi_value=energy(g, p, x),
                stationarity_residual=res,
            )
        tau = min(tau * 4.0, 1e8)
    raise NoConvergence(res, max_outer)


def _recession_value(g: Hypergraph, d, h_inf) -> float:
    """energy growth rate minus forcing along a direction, for p = 1."""
    return energy(g, 1.0, d) - float(np.asarray(h_inf) @ d)


def laplacian_matrix(g: Hypergraph) -> np.ndarray:
    """Weighted graph Laplacian; defined only when every edge has 2 vertices."""
    if any(len(e) != 2 for e in g.edges):
        raise NotALinearCase("all edges must have exactly two vertices")
    nv = g.n_vertices
    lap = np.zeros((nv, nv))
    for (u, v), w in zip(g.edges, g.weights):
        lap[u, u] += w
        lap[v, v] += w
        lap[u, v] -= w
        lap[v, u] -= w
    return lap


def linear_oracle(
    g: Hypergraph,
    x0,
    a: Schedule,
    h: Schedule | None,
    cfg: SolverConfig,
    dt_fine: float = 1e-4,
) -> Trajectory:
    """Ground-truth trajectory for p = 2 on a usual graph via fine RK4.

    The free block solves x_f' = -L_ff x_f - L_fc a(t) + h_f(t); the stored
    sections are the exact continuous ones, so the first n components of xi
    vanish identically.
    """
    if cfg.p != 2.0:
        raise NotALinearCase("linear oracle requires p = 2")
    lap = laplacian_matrix(g)
    validate(g)
    n, nv = g.n_free, g.n_vertices
    if h is None:
        h = _zero_schedule(nv)
    x0 = np.asarray(x0, dtype=np.float64)
    _check_admissible(x0, a.value(0.0), n)
    l_ff = lap[:n, :n]
    l_fc = lap[:n, n:]

    grid = time_grid(cfg.t_end, cfg.dt, a, h)
    nk = grid.shape[0]
    states = np.zeros((nk, nv))
    etas = np.zeros((nk, nv))
    xis = np.zeros((nk, nv))
    states[0] = np.concatenate((x0[:n], a.value(0.0)))

    def rhs(t, y):
        return -l_ff @ y - l_fc @ a.value(t) + h.value(t)[:n]

    y = x0[:n].copy()
    for k in range(1, nk):
        t0, t1 = grid[k - 1], grid[k]
        nsub = max(1, int(np.ceil((t1 - t0) / dt_fine)))
        hstep = (t1 - t0) / nsub
        t = t0
        for _ in range(nsub):
            k1 = rhs(t, y)
            k2 = rhs(t + hstep / 2, y + hstep / 2 * k1)
            k3 = rhs(t + hstep / 2, y + hstep / 2 * k2)
            k4 = rhs(t + hstep, y + hstep * k3)
            y = y + hstep / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += hstep
        states[k] = np.concatenate((y, a.value(t1)))

    for k in range(nk):
        t = grid[k]
        x = states[k]
        eta = lap @ x
        dx = np.concatenate((rhs(t, x[:n]), a.derivative(t)))
        etas[k] = eta
        xis[k] = h.value(t) - dx - eta
    return Trajectory(
        times=grid,
        states=states,
        eta=etas,
        xi=xis,
        residuals=np.zeros(nk),
        n_free=n,
    )


def trajectory_to_csv(traj: Trajectory) -> str:
    """Deterministic CSV: t, x_*, eta_*, xi_*, residual with 17 significant digits."""
    nv = traj.states.shape[1]
    cols = (
        ["t"]
        + [f"x_{i}" for i in range(nv)]
        + [f"eta_{i}" for i in range(nv)]
        + [f"xi_{i}" for i in range(nv)]
        + ["residual"]
    )
    lines = [",".join(cols)]
    for k in range(traj.times.shape[0]):
        vals = (
            [traj.times[k]]
            + list(traj.states[k])
            + list(traj.eta[k])
            + list(traj.xi[k])
            + [traj.residuals[k]]
        )
        lines.append(",".join(f"{v:.17g}" for v in vals))
    return "\n".join(lines) + "\n"


def with_config(cfg: SolverConfig, **kwargs) -> SolverConfig:
    return replace(cfg, **kwargs)
