"""Independent brute-force references used by the tests.

None of these share code with the library: the lower hull is obtained from
its Carathéodory definition, by enumerating pairs in 1-D and by solving the
defining linear program with a small batched simplex in higher dimensions.
"""
from __future__ import annotations

import numpy as np
from scipy.optimize import linprog


def caratheodory_1d(x, g) -> np.ndarray:
    """``min over i <= k <= j`` of the chord through ``(x_i, g_i), (x_j, g_j)`` at ``x_k``."""
    x = np.asarray(x, float)
    g = np.asarray(g, float)
    n = len(x)
    out = g.copy()
    for k in range(1, n - 1):
        xi, gi = x[:k, None], g[:k, None]
        xj, gj = x[None, k + 1:], g[None, k + 1:]
        chord = (gi * (xj - x[k]) + gj * (x[k] - xi)) / (xj - xi)
        out[k] = min(out[k], chord.min())
    return out


def caratheodory_lp(Y, g, chunk: int = 1024, max_iter: int = 400) -> np.ndarray:
    """``min sum l_j g_j`` over ``l >= 0, sum l_j = 1, sum l_j y_j = y_k`` for every node ``y_k``.

    A revised primal simplex run in lockstep over a batch of nodes. Each
    node starts from the degenerate basis of itself plus ``d`` nearby nodes;
    nodes that fail to converge are handed to ``linprog``.
    """
    Y = np.asarray(Y, float)
    g = np.asarray(g, float)
    n, d = Y.shape
    A = np.vstack([Y.T, np.ones(n)])  # (d+1, n)
    out = np.empty(n)
    start = _initial_bases(Y)
    for a in range(0, n, chunk):
        rows = np.arange(a, min(n, a + chunk))
        out[rows] = _simplex_batch(A, g, rows, start[rows], max_iter)
    return out


def _initial_bases(Y):
    n, d = Y.shape
    bases = np.empty((n, d + 1), int)
    from scipy.spatial import cKDTree

    tree = cKDTree(Y)
    _, nb = tree.query(Y, k=min(n, 4 * d + 4))
    for i in range(n):
        chosen = [i]
        M = np.zeros((0, d))
        for j in nb[i][1:]:
            cand = np.vstack([M, Y[j] - Y[i]])
            if np.linalg.matrix_rank(cand, tol=1e-12) == len(cand):
                chosen.append(j)
                M = cand
                if len(chosen) == d + 1:
                    break
        if len(chosen) < d + 1:
            raise RuntimeError("nodes are affinely degenerate")
        bases[i] = chosen
    return bases


def _simplex_batch(A, c, rows, basis, max_iter):
    m, n = A.shape
    B = basis.copy()
    nb = len(rows)
    b = A[:, rows].T  # right-hand side per node, (nb, m)
    active = np.ones(nb, bool)
    val = np.full(nb, np.nan)
    for _ in range(max_iter):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        Bm = A[:, B[idx]].transpose(1, 0, 2)  # (k, m, m)
        Binv = np.linalg.inv(Bm)
        xB = np.einsum("kij,kj->ki", Binv, b[idx])
        cB = c[B[idx]]
        pi = np.einsum("ki,kij->kj", cB, Binv)
        red = c[None, :] - pi @ A
        q = red.argmin(axis=1)
        rmin = red[np.arange(idx.size), q]
        done = rmin >= -1e-11 * (1 + np.abs(c).max())
        val[idx[done]] = np.einsum("ki,ki->k", cB[done], xB[done])
        active[idx[done]] = False
        go = ~done
        if not go.any():
            break
        idg = idx[go]
        d = np.einsum("kij,jk->ki", Binv[go], A[:, q[go]])
        xg = xB[go]
        ratio = np.where(d > 1e-12, np.maximum(xg, 0) / np.where(d > 1e-12, d, 1), np.inf)
        leave = ratio.argmin(axis=1)
        B[idg, leave] = q[go]
    for k in np.nonzero(active)[0]:
        res = linprog(c, A_eq=A, b_eq=b[k], bounds=(0, None), method="highs")
        val[k] = res.fun
    return val


def lower_hull_values(points, values) -> np.ndarray:
    """Dispatch to the 1-D enumeration or the LP oracle."""
    P = np.atleast_2d(np.asarray(points, float))
    if P.shape[1] == 1:
        order = np.argsort(P[:, 0])
        out = np.empty(len(P))
        out[order] = caratheodory_1d(P[order, 0], np.asarray(values)[order])
        return out
    return caratheodory_lp(P, values)


def numeric_rank_gram(V, tol=1e-10) -> int:
    """Rank via the largest k with a non-vanishing Gram determinant of chosen rows."""
    V = np.atleast_2d(np.asarray(V, float))
    chosen = []
    for v in V:
        trial = chosen + [v]
        M = np.array(trial)
        det = np.linalg.det(M @ M.T)
        if det > tol * max(1.0, float(np.prod([w @ w for w in trial]))):
            chosen = trial
    return len(chosen)
