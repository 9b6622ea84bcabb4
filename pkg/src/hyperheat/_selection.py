"""Argmax-pair bookkeeping and min-norm selection over products of simplices.

A subgradient selection is determined by one convex-weight vector per edge
over that edge's (tie-relaxed) argmax pairs.  The min-norm problem
``min || g0 + sum_e coef_e * B_e theta_e ||`` over those weights is a convex
QP solved by projected gradient with sorting-based simplex projections,
refined by an exact least-squares polish on the active support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import kernels


@dataclass
class PairData:
    """Tie-relaxed argmax pairs of every edge at a fixed state."""

    f: np.ndarray  # per-edge spread
    coef: np.ndarray  # per-edge w_e * f_e**(p-1)
    pair_edge: np.ndarray
    pair_u: np.ndarray
    pair_v: np.ndarray
    pair_offsets: np.ndarray

    @property
    def n_pairs(self) -> int:
        return self.pair_edge.shape[0]

    def block_sizes(self) -> np.ndarray:
        return np.diff(self.pair_offsets)


def build_pairs(x, arrays, p, tie_rel, coef_slack=False) -> PairData:
    """Enumerate argmax pairs with per-edge absolute slack tie_rel * (1 + f_e).

    With coef_slack, edges whose spread lies inside the tie slack use the
    coefficient w * (f + tie)**(p-1) instead of w * f**(p-1).  Such edges
    keep every ordered pair, so their pair hull contains zero and the
    scaled hull realizes every smaller coefficient as well: this is the
    coefficient set reachable at tie-distance points.  Exponents in (1, 2)
    need it: their stationary spreads can fall below float spacing, where
    the plain coefficient collapses.  Wide edges are left exact.
    """
    emax, emin = kernels.edge_extrema(x, arrays.members, arrays.offsets)
    f = emax - emin
    tie_abs = tie_rel * (1.0 + f)
    pe, pu, pv, po = kernels.argmax_pairs_flat(
        x, arrays.members, arrays.offsets, emax, emin, tie_abs
    )
    f_eff = np.where(f <= tie_abs, f + tie_abs, f) if coef_slack else f
    coef = arrays.weights * f_eff ** (p - 1.0)
    return PairData(f=f, coef=coef, pair_edge=pe, pair_u=pu, pair_v=pv, pair_offsets=po)


def uniform_theta(pairs: PairData) -> np.ndarray:
    sizes = pairs.block_sizes()
    if pairs.n_pairs == 0:
        return np.zeros(0)
    return 1.0 / np.repeat(sizes.astype(np.float64), sizes)


def _polish(g0, pairs: PairData, row_of_vertex, theta, max_pivots=60):
    """Active-set solve of the min-norm QP, warm started at theta.

    Projected gradient crawls when the per-edge coefficients differ by
    orders of magnitude, so the finisher pivots exactly: equality least
    squares on the working support, dropping negative weights and entering
    pairs whose reduced gradient is negative, until the KKT conditions
    hold.  Returns (theta, objective) or None if pivoting stalls.
    """
    n_pairs = theta.shape[0]
    dim = g0.shape[0]
    # dense columns once; the pair counts are small by construction
    m_full = np.zeros((dim, n_pairs))
    c_pair = pairs.coef[pairs.pair_edge]
    ru = row_of_vertex[pairs.pair_u]
    rv = row_of_vertex[pairs.pair_v]
    for t in range(n_pairs):
        if ru[t] >= 0:
            m_full[ru[t], t] += c_pair[t]
        if rv[t] >= 0:
            m_full[rv[t], t] -= c_pair[t]
    blocks = pairs.pair_edge
    n_blocks = pairs.pair_offsets.shape[0] - 1

    support = theta > 1e-10
    for e in range(n_blocks):
        lo, hi = pairs.pair_offsets[e], pairs.pair_offsets[e + 1]
        if hi > lo and not support[lo:hi].any():
            support[lo + int(np.argmax(theta[lo:hi]))] = True

    best = None
    for _ in range(max_pivots):
        sel = np.nonzero(support)[0]
        ns = sel.shape[0]
        m_s = m_full[:, sel]
        bsel = blocks[sel]
        present = np.unique(bsel)
        a_mat = (bsel[None, :] == present[:, None]).astype(np.float64)
        nb = present.shape[0]
        kkt = np.zeros((ns + nb, ns + nb))
        kkt[:ns, :ns] = 2.0 * m_s.T @ m_s
        kkt[:ns, ns:] = a_mat.T
        kkt[ns:, :ns] = a_mat
        rhs = np.concatenate((-2.0 * m_s.T @ g0, np.ones(nb)))
        try:
            sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
        except np.linalg.LinAlgError:
            return best
        th_s = sol[:ns]
        if np.abs(a_mat @ th_s - 1.0).max() > 1e-8:
            return best  # singular working set: the simplex sums broke
        neg = th_s < -1e-12
        if neg.any():
            # drop the most negative weight whose block keeps a member
            order = np.argsort(th_s)
            dropped = False
            for k in order:
                if th_s[k] >= -1e-12:
                    break
                blk = bsel[k]
                if (bsel == blk).sum() > 1:
                    support[sel[k]] = False
                    dropped = True
                    break
            if not dropped:
                return best
            continue
        th_s = np.maximum(th_s, 0.0)
        out = np.zeros(n_pairs)
        out[sel] = th_s
        r = kernels.minnorm_residual(
            g0,
            out,
            pairs.coef,
            pairs.pair_edge,
            pairs.pair_u,
            pairs.pair_v,
            row_of_vertex,
        )
        obj = float(r @ r)
        if best is None or obj < best[1]:
            best = (out, obj)
        # reduced gradients of the pairs outside the support
        grad = 2.0 * (m_full.T @ r)
        nu = np.zeros(n_blocks)
        for bi, e in enumerate(present):
            members = sel[bsel == e]
            nu[e] = -grad[members].mean()
        outside = np.nonzero(~support)[0]
        if outside.shape[0] == 0:
            return best
        reduced = grad[outside] + nu[blocks[outside]]
        k = int(np.argmin(reduced))
        if reduced[k] >= -1e-12 * (1.0 + obj):
            return best
        support[outside[k]] = True
    return best


def min_norm_selection(
    g0,
    row_of_vertex,
    pairs: PairData,
    target=0.0,
    max_iter=20000,
    chunk=80,
):
    """Minimize ||g0 + M theta|| over the product of simplices.

    Returns (theta, r, res) with r the residual vector and res its norm.
    """
    if pairs.n_pairs == 0:
        return np.zeros(0), g0.copy(), float(np.linalg.norm(g0))
    theta = uniform_theta(pairs)
    sizes = pairs.block_sizes()
    if (sizes == 1).all():
        r = kernels.minnorm_residual(
            g0,
            theta,
            pairs.coef,
            pairs.pair_edge,
            pairs.pair_u,
            pairs.pair_v,
            row_of_vertex,
        )
        return theta, r, float(np.linalg.norm(r))

    best_obj = np.inf
    it = 0
    while it < max_iter:
        theta, obj = kernels.minnorm_qp(
            g0,
            theta,
            pairs.coef,
            pairs.pair_edge,
            pairs.pair_u,
            pairs.pair_v,
            pairs.pair_offsets,
            row_of_vertex,
            chunk,
            1e-4 * target * target + 1e-30,
            target,
        )
        it += chunk
        sums = np.add.reduceat(theta, pairs.pair_offsets[:-1])
        if np.abs(sums - 1.0).max() > 1e-9:
            # numerical breakdown inside the kernel: fall back to uniform
            theta = uniform_theta(pairs)
            r = kernels.minnorm_residual(
                g0,
                theta,
                pairs.coef,
                pairs.pair_edge,
                pairs.pair_u,
                pairs.pair_v,
                row_of_vertex,
            )
            obj = float(r @ r)
        if obj <= target * target:
            best_obj = obj
            break
        # projected gradient crawls under badly scaled coefficients; the
        # exact active-set finisher settles whether the optimum is reached
        polished = _polish(g0, pairs, row_of_vertex, theta)
        if polished is not None and polished[1] < obj:
            theta, obj = polished
        if obj <= target * target:
            best_obj = obj
            break
        if best_obj - obj <= 1e-6 * (obj + target * target):
            best_obj = min(best_obj, obj)
            break
        best_obj = min(best_obj, obj)
        chunk = 800  # the cheap pivoting finisher failed; lean on descent
    r = kernels.minnorm_residual(
        g0, theta, pairs.coef, pairs.pair_edge, pairs.pair_u, pairs.pair_v, row_of_vertex
    )
    return theta, r, float(np.linalg.norm(r))


def full_eta(theta, pairs: PairData, nv) -> np.ndarray:
    """Assemble the full-coordinate subgradient for a weight selection."""
    return kernels.selection_eta(
        theta, pairs.coef, pairs.pair_edge, pairs.pair_u, pairs.pair_v, nv
    )


def identity_rows(nv) -> np.ndarray:
    return np.arange(nv, dtype=np.int64)
