"""Polyhedral convex functions, the minimal convex extension of a jet, and its
splitting into a coercive part plus a linear drift.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from .jets import DEFAULT_TOL, JetDataset, JetError, Subspace, Tolerances, _range_basis


class NotCoercive(ValueError):
    """The slope hull has 0 outside its interior, so no linear growth bound exists."""


class DecompositionError(ValueError):
    """Slopes do not share a common orthogonal component (rank misdetection)."""


@dataclass(frozen=True)
class PolyhedralConvex:
    """``x -> max_i <a_i, x> + b_i`` stored as ``slopes`` (m, d) and ``offsets`` (m,)."""

    slopes: np.ndarray
    offsets: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.slopes, dtype=float))
        b = np.asarray(self.offsets, dtype=float).reshape(-1)
        if A.shape[0] == 0 or A.shape[0] != b.shape[0]:
            raise ValueError("need a nonempty, matching list of pieces")
        object.__setattr__(self, "slopes", A)
        object.__setattr__(self, "offsets", b)

    @property
    def dim(self) -> int:
        return self.slopes.shape[1]

    def __len__(self):
        return self.offsets.size

    def pieces(self, x) -> np.ndarray:
        """Value of every affine piece at every row of ``x``; shape (q, m)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return x @ self.slopes.T + self.offsets

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        vals = self.pieces(x.reshape(-1, self.dim)).max(axis=1)
        return vals[0] if x.ndim == 1 else vals

    def argmax(self, x):
        x = np.asarray(x, dtype=float)
        idx = self.pieces(x.reshape(-1, self.dim)).argmax(axis=1)
        return idx[0] if x.ndim == 1 else idx

    def lipschitz(self) -> float:
        return float(np.linalg.norm(self.slopes, axis=1).max())

    def to_dict(self) -> dict:
        return {"slopes": self.slopes.tolist(), "offsets": self.offsets.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "PolyhedralConvex":
        return cls(np.asarray(d["slopes"], float), np.asarray(d["offsets"], float))


def build_minimal(ds: JetDataset, check: bool = True, tol: Tolerances = DEFAULT_TOL) -> PolyhedralConvex:
    """Minimal convex extension ``m(x) = max_i f_i + <g_i, x - x_i>``.

    Refuses datasets violating the convexity inequalities, since then
    ``m(x_i) > f_i`` somewhere and ``m`` does not interpolate.
    """
    if check:
        from .validator import check_convexity

        res = check_convexity(ds, tol)
        if res.violations:
            i, j, d = res.violations[0]
            raise JetError(f"convexity violated at pair ({i}, {j}) with slack {d:.3e}")
    offsets = ds.F - np.einsum("ij,ij->i", ds.G, ds.X)
    return PolyhedralConvex(ds.G.copy(), offsets)


def eval_with_active_set(m: PolyhedralConvex, x, tol: Tolerances = DEFAULT_TOL):
    """Value of ``m`` at ``x`` and the indices of pieces within ``tol_eq`` of the max.

    The subdifferential at ``x`` is the convex hull of the returned slopes.
    """
    p = m.pieces(np.asarray(x, dtype=float).reshape(1, -1))[0]
    top = p.max()
    thr = tol.tol_eq + tol.rel_eq * (1.0 + abs(top) + np.abs(m.offsets).max())
    return float(top), np.nonzero(p >= top - thr)[0]


@dataclass(frozen=True)
class Decomposition:
    """``m = c o P_Y + <v, .>`` with ``c`` given in coordinates of ``Y.basis``."""

    Y: Subspace
    v: np.ndarray
    c: PolyhedralConvex
    K: float

    def reduced_coords(self, x) -> np.ndarray:
        return self.Y.coords(x)

    def reconstruct(self, x):
        """Evaluate ``c(P_Y x) + <v, x>``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if self.Y.dim == 0:
            return self.c.offsets.max() + x @ self.v
        return self.c(self.Y.coords(x)) + x @ self.v

    def to_dict(self) -> dict:
        return {"Y": self.Y.basis.tolist(), "v": self.v.tolist(), "c": self.c.to_dict(), "K": self.K}


def decompose(m: PolyhedralConvex, tol: Tolerances = DEFAULT_TOL) -> Decomposition:
    """Split ``m`` into a part living on the span of its slope differences and
    a drift vector orthogonal to that span.
    """
    A = m.slopes
    n = A.shape[1]
    Y = Subspace(n, _range_basis(A - A[0], tol.tol_rank))
    v = A[0] - Y.embed(Y.coords(A[0]))
    resid = A - Y.embed(Y.coords(A)) - v
    scale = max(1.0, float(np.abs(A).max()))
    if np.abs(resid).max(initial=0.0) > tol.tol_rank * scale * 10:
        raise DecompositionError(
            f"orthogonal components disagree by {np.abs(resid).max():.3e}")
    if Y.dim:
        c = PolyhedralConvex(Y.coords(A), m.offsets.copy())
    else:
        c = PolyhedralConvex(np.zeros((len(m), 1)), m.offsets.copy())
    return Decomposition(Y, v, c, float(np.linalg.norm(A, axis=1).max()))


@dataclass(frozen=True)
class CoercivityMinorant:
    """Constants with ``c(y) >= alpha |y| + beta`` on the reduced space."""

    alpha: float
    beta: float


def support_minimum(slopes: np.ndarray) -> float:
    """``min_{|u|=1} max_i <a_i, u>`` for points ``a_i`` spanning their space.

    When 0 lies inside the hull of the slopes this is the distance from 0 to the
    hull boundary, read off the facet equations; otherwise it is <= 0 and the
    exact value is found by scanning facets and vertices.
    """
    S = np.atleast_2d(slopes)
    k = S.shape[1]
    if k == 1:
        return float(min(S.max(), -S.min()))
    try:
        hull = ConvexHull(S)
    except QhullError:
        return float(_support_min_sampled(S, 4096))
    # equations: n.x + off <= 0 inside, |n| = 1
    offs = hull.equations[:, -1]
    if np.all(offs < 0):
        return float(-offs.max())
    return float(_support_min_sampled(S, 4096))


def _support_min_sampled(S: np.ndarray, count: int, seed: int = 0) -> float:
    k = S.shape[1]
    if k == 2:
        t = np.linspace(0, 2 * np.pi, count, endpoint=False)
        U = np.c_[np.cos(t), np.sin(t)]
    else:
        U = np.random.default_rng(seed).normal(size=(count, k))
        U /= np.linalg.norm(U, axis=1, keepdims=True)
    return float((U @ S.T).max(axis=1).min())


def coercivity_minorant(dec: Decomposition) -> CoercivityMinorant:
    """Linear growth constants of the reduced function ``c``.

    ``alpha`` is the minimum of the support function of the slope hull over
    the unit sphere of ``Y``; ``beta`` is the smallest offset.
    """
    if dec.Y.dim < 1:
        raise NotCoercive("reduced space is trivial")
    alpha = support_minimum(dec.c.slopes)
    if not alpha > 0:
        raise NotCoercive(f"support function minimum is {alpha:.3e} <= 0")
    return CoercivityMinorant(alpha, float(dec.c.offsets.min()))


def chebyshev_center(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Center and radius of the largest ball inside the hull of ``points``."""
    P = np.atleast_2d(points)
    k = P.shape[1]
    if k == 1:
        lo, hi = P.min(), P.max()
        return np.array([(lo + hi) / 2]), float((hi - lo) / 2)
    hull = ConvexHull(P)
    Aeq = hull.equations[:, :-1]
    b = -hull.equations[:, -1]
    # maximise r subject to n.x + r |n| <= b
    c = np.zeros(k + 1)
    c[-1] = -1.0
    A = np.c_[Aeq, np.linalg.norm(Aeq, axis=1)]
    res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * k + [(0, None)], method="highs")
    if res.status != 0:
        raise NotCoercive("could not locate an interior point of the slope hull")
    return res.x[:k], float(res.x[k])


def recenter(dec: Decomposition) -> Decomposition:
    """Move the Chebyshev center of the slope hull of ``c`` into ``v``.

    Afterwards ``c`` is coercive on ``Y`` (its slopes surround 0 with the
    largest possible margin) while ``c o P_Y + <v, .>`` is unchanged.
    """
    if dec.Y.dim == 0:
        return dec
    eta, _ = chebyshev_center(dec.c.slopes)
    c = PolyhedralConvex(dec.c.slopes - eta, dec.c.offsets)
    return Decomposition(dec.Y, dec.v + dec.Y.embed(eta), c, dec.K)
