"""Pure-numpy implementations of the hot kernels.

Twin of :mod:`hyperheat._kernels_numba`; selected when the environment
variable ``HYPERHEAT_BACKEND=numpy`` is set or numba is unavailable.
Signatures and semantics must stay in lockstep with the numba module.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "numpy"


def edge_extrema(values, members, offsets):
    """Per-edge (max, min) of ``values`` over the member lists."""
    if offsets.shape[0] <= 1:
        return np.zeros(0), np.zeros(0)
    gathered = values[members]
    emax = np.maximum.reduceat(gathered, offsets[:-1])
    emin = np.minimum.reduceat(gathered, offsets[:-1])
    return emax, emin


def energy_value(values, members, offsets, weights, p):
    """Energy (1/p) * sum_e w_e * (max - min over e)**p."""
    emax, emin = edge_extrema(values, members, offsets)
    spread = emax - emin
    return float(np.sum(weights * spread**p) / p)


def argmax_pairs_flat(values, members, offsets, emax, emin, tie_abs):
    """All ordered member pairs (u, v) with x_u - x_v >= spread_e - tie_abs_e.

    Returns flat arrays (pair_edge, pair_u, pair_v, pair_offsets) with the
    pairs of edge e in pair_offsets[e]:pair_offsets[e+1], enumerated
    u-major in member order.
    """
    n_edges = offsets.shape[0] - 1
    pe, pu, pv = [], [], []
    pair_offsets = np.zeros(n_edges + 1, dtype=np.int64)
    for e in range(n_edges):
        mem = members[offsets[e] : offsets[e + 1]]
        xv = values[mem]
        du = emax[e] - xv
        dv = xv - emin[e]
        mask = du[:, None] + dv[None, :] <= tie_abs[e]
        ii, jj = np.nonzero(mask)
        pe.append(np.full(ii.shape[0], e, dtype=np.int64))
        pu.append(mem[ii])
        pv.append(mem[jj])
        pair_offsets[e + 1] = pair_offsets[e] + ii.shape[0]
    if n_edges == 0:
        z = np.zeros(0, dtype=np.int64)
        return z, z.copy(), z.copy(), pair_offsets
    return np.concatenate(pe), np.concatenate(pu), np.concatenate(pv), pair_offsets


def selection_eta(theta, coef, pair_edge, pair_u, pair_v, nv):
    """eta = sum_t coef[edge_t] * theta_t * (delta_u - delta_v)."""
    eta = np.zeros(nv)
    contrib = coef[pair_edge] * theta
    np.add.at(eta, pair_u, contrib)
    np.add.at(eta, pair_v, -contrib)
    return eta


def _project_simplices(v, starts, sizes, block, rank):
    """Project each contiguous block of v onto the probability simplex."""
    order = np.lexsort((-v, block))
    s = v[order]
    cs = np.cumsum(s)
    before = np.concatenate(([0.0], cs))[starts]
    csseg = cs - np.repeat(before, sizes)
    t_cand = (csseg - 1.0) / rank
    cond = s - t_cand > 0.0
    cnt = np.add.reduceat(cond.astype(np.int64), starts)
    tau = t_cand[starts + cnt - 1]
    theta_sorted = np.maximum(s - np.repeat(tau, sizes), 0.0)
    out = np.empty_like(v)
    out[order] = theta_sorted
    return out


def minnorm_residual(g0, theta, coef, pair_edge, pair_u, pair_v, row_of_vertex):
    """Residual vector g0 + M theta in the mapped row space."""
    rows_u = row_of_vertex[pair_u]
    rows_v = row_of_vertex[pair_v]
    contrib = coef[pair_edge] * theta
    r = g0.copy()
    mu = rows_u >= 0
    mv = rows_v >= 0
    np.add.at(r, rows_u[mu], contrib[mu])
    np.add.at(r, rows_v[mv], -contrib[mv])
    return r


def minnorm_qp(
    g0,
    theta,
    coef,
    pair_edge,
    pair_u,
    pair_v,
    pair_offsets,
    row_of_vertex,
    max_iter,
    dec_tol,
    target,
):
    """Projected-gradient descent for min ||g0 + M theta||^2 over per-edge simplices.

    theta is updated in place and returned together with the final squared
    objective.  Stops when the objective drops below target**2, when the
    decrease over a 100-iteration window falls under dec_tol, or at max_iter.
    """
    n_pairs = theta.shape[0]
    if n_pairs == 0:
        return theta, float(g0 @ g0)
    starts = pair_offsets[:-1]
    sizes = np.diff(pair_offsets)
    block = np.repeat(np.arange(starts.shape[0]), sizes)
    rank = np.arange(n_pairs) - np.repeat(starts, sizes) + 1.0
    rows_u = row_of_vertex[pair_u]
    rows_v = row_of_vertex[pair_v]
    mu = rows_u >= 0
    mv = rows_v >= 0
    rows_u_c = np.clip(rows_u, 0, None)
    rows_v_c = np.clip(rows_v, 0, None)
    scatter_u = rows_u[mu]
    scatter_v = rows_v[mv]
    c_pair = coef[pair_edge]

    def residual(th):
        r = g0.copy()
        contrib = c_pair * th
        np.add.at(r, scatter_u, contrib[mu])
        np.add.at(r, scatter_v, -contrib[mv])
        return r

    def grad(r):
        ru = np.where(mu, r[rows_u_c], 0.0)
        rv = np.where(mv, r[rows_v_c], 0.0)
        return 2.0 * c_pair * (ru - rv)

    col_norm2 = c_pair**2 * (mu.astype(np.float64) + mv.astype(np.float64))
    fro2 = float(col_norm2.sum())
    if fro2 <= 1e-28:
        # the columns cannot move the residual above certificate resolution
        r = residual(theta)
        return theta, float(r @ r)
    # power iteration for lambda_max(M^T M); fro2 is the safe fallback
    v = np.ones(n_pairs) / np.sqrt(n_pairs)
    lam = fro2
    for _ in range(25):
        r = residual(v) - g0
        w = 0.5 * grad(r)  # M^T (M v)
        nw = np.linalg.norm(w)
        if nw <= 0.0:
            lam = 0.0
            break
        lam = float(v @ w)
        v = w / nw
    # the Frobenius bound is always safe; trust the power estimate only
    # when it is well separated from zero
    l_use = fro2
    if np.isfinite(lam) and lam > 1e-6 * fro2:
        l_use = min(fro2, 1.5 * lam)
    if l_use <= 0.0:
        r = residual(theta)
        return theta, float(r @ r)
    step = 1.0 / (2.0 * l_use)

    r = residual(theta)
    obj = float(r @ r)
    best_obj = obj
    best_theta = theta.copy()
    window_obj = obj
    it = 0
    while it < max_iter:
        g = grad(r)
        theta = _project_simplices(theta - step * g, starts, sizes, block, rank)
        r = residual(theta)
        obj = float(r @ r)
        if obj < best_obj:
            best_obj = obj
            best_theta = theta.copy()
        elif not np.isfinite(obj) or obj > best_obj * (1.0 + 1e-9) + 1e-300:
            # overstep or numerical blowup: halve and restart from the best
            step *= 0.5
            theta = best_theta.copy()
            r = residual(theta)
            obj = best_obj
        it += 1
        if best_obj <= target * target:
            break
        if it % 100 == 0:
            if window_obj - best_obj < dec_tol:
                break
            window_obj = best_obj
    return best_theta, best_obj
