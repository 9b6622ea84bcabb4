"""Numba-jitted implementations of the hot kernels.

Twin of :mod:`hyperheat._kernels_numpy`; this is the default backend.
Signatures and semantics must stay in lockstep with the numpy module.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND_NAME = "numba"


@njit(cache=True)
def edge_extrema(values, members, offsets):
    n_edges = offsets.shape[0] - 1
    emax = np.empty(n_edges)
    emin = np.empty(n_edges)
    for e in range(n_edges):
        hi = values[members[offsets[e]]]
        lo = hi
        for k in range(offsets[e] + 1, offsets[e + 1]):
            x = values[members[k]]
            if x > hi:
                hi = x
            if x < lo:
                lo = x
        emax[e] = hi
        emin[e] = lo
    return emax, emin


@njit(cache=True)
def energy_value(values, members, offsets, weights, p):
    n_edges = offsets.shape[0] - 1
    total = 0.0
    for e in range(n_edges):
        hi = values[members[offsets[e]]]
        lo = hi
        for k in range(offsets[e] + 1, offsets[e + 1]):
            x = values[members[k]]
            if x > hi:
                hi = x
            if x < lo:
                lo = x
        total += weights[e] * (hi - lo) ** p
    return total / p


@njit(cache=True)
def argmax_pairs_flat(values, members, offsets, emax, emin, tie_abs):
    n_edges = offsets.shape[0] - 1
    pair_offsets = np.zeros(n_edges + 1, dtype=np.int64)
    for e in range(n_edges):
        cnt = 0
        for i in range(offsets[e], offsets[e + 1]):
            du = emax[e] - values[members[i]]
            for j in range(offsets[e], offsets[e + 1]):
                if du + (values[members[j]] - emin[e]) <= tie_abs[e]:
                    cnt += 1
        pair_offsets[e + 1] = pair_offsets[e] + cnt
    total = pair_offsets[n_edges]
    pair_edge = np.empty(total, dtype=np.int64)
    pair_u = np.empty(total, dtype=np.int64)
    pair_v = np.empty(total, dtype=np.int64)
    t = 0
    for e in range(n_edges):
        for i in range(offsets[e], offsets[e + 1]):
            du = emax[e] - values[members[i]]
            for j in range(offsets[e], offsets[e + 1]):
                if du + (values[members[j]] - emin[e]) <= tie_abs[e]:
                    pair_edge[t] = e
                    pair_u[t] = members[i]
                    pair_v[t] = members[j]
                    t += 1
    return pair_edge, pair_u, pair_v, pair_offsets


@njit(cache=True)
def selection_eta(theta, coef, pair_edge, pair_u, pair_v, nv):
    eta = np.zeros(nv)
    for t in range(theta.shape[0]):
        c = coef[pair_edge[t]] * theta[t]
        eta[pair_u[t]] += c
        eta[pair_v[t]] -= c
    return eta


@njit(cache=True)
def _project_simplex_block(v):
    k = v.shape[0]
    s = np.sort(v)[::-1]
    cs = 0.0
    tau = 0.0
    for i in range(k):
        cs += s[i]
        cand = (cs - 1.0) / (i + 1.0)
        if s[i] - cand > 0.0:
            tau = cand
    out = np.empty(k)
    for i in range(k):
        d = v[i] - tau
        out[i] = d if d > 0.0 else 0.0
    return out


@njit(cache=True)
def minnorm_residual(g0, theta, coef, pair_edge, pair_u, pair_v, row_of_vertex):
    r = g0.copy()
    for t in range(theta.shape[0]):
        c = coef[pair_edge[t]] * theta[t]
        ru = row_of_vertex[pair_u[t]]
        rv = row_of_vertex[pair_v[t]]
        if ru >= 0:
            r[ru] += c
        if rv >= 0:
            r[rv] -= c
    return r


@njit(cache=True)
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
    n_pairs = theta.shape[0]
    if n_pairs == 0:
        return theta, float(g0 @ g0)
    n_edges = pair_offsets.shape[0] - 1
    dim = g0.shape[0]

    c_pair = np.empty(n_pairs)
    rows_u = np.empty(n_pairs, dtype=np.int64)
    rows_v = np.empty(n_pairs, dtype=np.int64)
    fro2 = 0.0
    for t in range(n_pairs):
        c_pair[t] = coef[pair_edge[t]]
        rows_u[t] = row_of_vertex[pair_u[t]]
        rows_v[t] = row_of_vertex[pair_v[t]]
        nz = 0.0
        if rows_u[t] >= 0:
            nz += 1.0
        if rows_v[t] >= 0:
            nz += 1.0
        fro2 += c_pair[t] * c_pair[t] * nz

    r = np.empty(dim)
    g = np.empty(n_pairs)

    # residual r = g0 + M theta
    for i in range(dim):
        r[i] = g0[i]
    for t in range(n_pairs):
        c = c_pair[t] * theta[t]
        if rows_u[t] >= 0:
            r[rows_u[t]] += c
        if rows_v[t] >= 0:
            r[rows_v[t]] -= c

    if fro2 <= 1e-28:
        # the columns cannot move the residual above certificate resolution
        obj = 0.0
        for i in range(dim):
            obj += r[i] * r[i]
        return theta, obj

    # power iteration for lambda_max(M^T M)
    v = np.full(n_pairs, 1.0 / np.sqrt(n_pairs))
    lam = fro2
    mv = np.empty(dim)
    for _ in range(25):
        for i in range(dim):
            mv[i] = 0.0
        for t in range(n_pairs):
            c = c_pair[t] * v[t]
            if rows_u[t] >= 0:
                mv[rows_u[t]] += c
            if rows_v[t] >= 0:
                mv[rows_v[t]] -= c
        nw = 0.0
        lam = 0.0
        for t in range(n_pairs):
            ru = mv[rows_u[t]] if rows_u[t] >= 0 else 0.0
            rv = mv[rows_v[t]] if rows_v[t] >= 0 else 0.0
            g[t] = c_pair[t] * (ru - rv)
            nw += g[t] * g[t]
            lam += v[t] * g[t]
        nw = np.sqrt(nw)
        if nw <= 0.0:
            lam = 0.0
            break
        for t in range(n_pairs):
            v[t] = g[t] / nw
    # the Frobenius bound is always safe; trust the power estimate only
    # when it is well separated from zero
    l_use = fro2
    if np.isfinite(lam) and lam > 1e-6 * fro2 and 1.5 * lam < l_use:
        l_use = 1.5 * lam
    if l_use <= 0.0:
        obj = 0.0
        for i in range(dim):
            obj += r[i] * r[i]
        return theta, obj
    step = 1.0 / (2.0 * l_use)

    obj = 0.0
    for i in range(dim):
        obj += r[i] * r[i]
    best_obj = obj
    best_theta = theta.copy()
    window_obj = obj
    it = 0
    while it < max_iter:
        for t in range(n_pairs):
            ru = r[rows_u[t]] if rows_u[t] >= 0 else 0.0
            rv = r[rows_v[t]] if rows_v[t] >= 0 else 0.0
            g[t] = 2.0 * c_pair[t] * (ru - rv)
        for e in range(n_edges):
            lo = pair_offsets[e]
            hi = pair_offsets[e + 1]
            if hi > lo:
                theta[lo:hi] = _project_simplex_block(theta[lo:hi] - step * g[lo:hi])
        for i in range(dim):
            r[i] = g0[i]
        for t in range(n_pairs):
            c = c_pair[t] * theta[t]
            if rows_u[t] >= 0:
                r[rows_u[t]] += c
            if rows_v[t] >= 0:
                r[rows_v[t]] -= c
        obj = 0.0
        for i in range(dim):
            obj += r[i] * r[i]
        if obj < best_obj:
            best_obj = obj
            best_theta = theta.copy()
        elif not np.isfinite(obj) or obj > best_obj * (1.0 + 1e-9) + 1e-300:
            step *= 0.5
            theta = best_theta.copy()
            for i in range(dim):
                r[i] = g0[i]
            for t in range(n_pairs):
                c = c_pair[t] * theta[t]
                if rows_u[t] >= 0:
                    r[rows_u[t]] += c
                if rows_v[t] >= 0:
                    r[rows_v[t]] -= c
            obj = best_obj
        it += 1
        if best_obj <= target * target:
            break
        if it % 100 == 0:
            if window_obj - best_obj < dec_tol:
                break
            window_obj = best_obj
    return best_theta, best_obj
