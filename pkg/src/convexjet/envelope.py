"""Discrete convex envelopes on tensor grids.

The convex envelope (biconjugate) of a function sampled on a grid, possibly
with a few extra scattered nodes, is its lower convex hull. In one dimension
it is computed with a linear-time monotone-chain scan; in two or more it is
read off the lower facets of the epigraph hull. The discrete Legendre
transform on a dual lattice is computed separably, axis by axis, with the
linear-time 1-D algorithm.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

MIN_COUNT = 10


class GridError(ValueError):
    """Grid specification is malformed or does not cover the data."""


@dataclass(frozen=True)
class GridSpec:
    """Tensor grid with ``counts[k]`` equispaced nodes on ``[lo[k], hi[k]]``."""

    lo: tuple
    hi: tuple
    counts: tuple

    def __post_init__(self):
        lo = tuple(float(a) for a in np.atleast_1d(self.lo))
        hi = tuple(float(a) for a in np.atleast_1d(self.hi))
        counts = tuple(int(c) for c in np.atleast_1d(self.counts))
        if not (len(lo) == len(hi) == len(counts)):
            raise GridError("lo, hi and counts must have equal length")
        if any(c < MIN_COUNT for c in counts):
            raise GridError(f"need at least {MIN_COUNT} nodes per axis")
        if any(not b > a for a, b in zip(lo, hi)):
            raise GridError("each axis needs lo < hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def covering(cls, points, counts, pad: float = 0.1, min_width: float = 1e-3) -> "GridSpec":
        """Smallest box around ``points`` leaving at least four cells of margin.

        ``pad`` is an extra relative margin on each side.
        """
        P = np.atleast_2d(np.asarray(points, dtype=float))
        d = P.shape[1]
        counts = np.broadcast_to(np.asarray(counts, dtype=int), (d,))
        lo, hi = P.min(axis=0), P.max(axis=0)
        width = np.maximum(hi - lo, max(min_width, min_width * float((hi - lo).max())))
        if np.any(counts < MIN_COUNT):
            raise GridError(f"need at least {MIN_COUNT} nodes per axis")
        # per axis, m >= 4 (w + 2m) / (n - 1); then raise every margin to four
        # times the coarsest spacing
        m = np.maximum(pad, 4.0 / (counts - 9)) * width
        for _ in range(100):
            h = ((width + 2 * m) / (counts - 1)).max()
            if np.all(m >= 4 * h * (1 - 1e-12)):
                break
            m = np.maximum(m, 4 * h)
        return cls(tuple(lo - m), tuple(hi + m), tuple(int(c) for c in counts))

    @property
    def dim(self) -> int:
        return len(self.counts)

    @property
    def shape(self) -> tuple:
        return self.counts

    @property
    def axes(self) -> list:
        return [np.linspace(a, b, n) for a, b, n in zip(self.lo, self.hi, self.counts)]

    @property
    def spacing(self) -> np.ndarray:
        return np.array([(b - a) / (n - 1) for a, b, n in zip(self.lo, self.hi, self.counts)])

    @property
    def h_grid(self) -> float:
        return float(self.spacing.max())

    def nodes(self) -> np.ndarray:
        """All nodes as an (M, d) array in C order."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def contains(self, points, margin: float = 0.0) -> bool:
        P = np.atleast_2d(points)
        lo = np.array(self.lo) + margin
        hi = np.array(self.hi) - margin
        return bool(np.all(P >= lo - 1e-12) and np.all(P <= hi + 1e-12))

    def to_dict(self) -> dict:
        return {"lo": list(self.lo), "hi": list(self.hi), "counts": list(self.counts)}

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(tuple(d["lo"]), tuple(d["hi"]), tuple(d["counts"]))


@dataclass
class GridFunction:
    """Values on the nodes of ``spec`` plus optional scattered extra nodes."""

    spec: GridSpec
    values: np.ndarray
    extra_points: np.ndarray | None = None
    extra_values: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.spec.shape)
        if not np.all(np.isfinite(self.values)):
            raise GridError("grid values must be finite")
        if self.extra_points is None:
            self.extra_points = np.zeros((0, self.spec.dim))
            self.extra_values = np.zeros(0)
        self.extra_points = np.asarray(self.extra_points, float).reshape(-1, self.spec.dim)
        self.extra_values = np.asarray(self.extra_values, float).reshape(-1)
        if len(self.extra_points) != len(self.extra_values):
            raise GridError("extra points and values differ in length")

    @classmethod
    def sample(cls, spec: GridSpec, fn, extra_points=None) -> "GridFunction":
        """Evaluate a vectorized ``fn((M, d) array)`` on the grid and extras."""
        vals = fn(spec.nodes())
        ev = None
        if extra_points is not None:
            extra_points = np.asarray(extra_points, float).reshape(-1, spec.dim)
            ev = fn(extra_points) if len(extra_points) else np.zeros(0)
        return cls(spec, vals, extra_points, ev)

    def flat(self) -> tuple[np.ndarray, np.ndarray]:
        """Node coordinates and values, grid nodes first."""
        return (np.vstack([self.spec.nodes(), self.extra_points]),
                np.concatenate([self.values.ravel(), self.extra_values]))

    def to_csv(self, path) -> None:
        P, v = self.flat()
        head = ",".join([f"y{k}" for k in range(self.spec.dim)] + ["value"])
        np.savetxt(path, np.c_[P, v], delimiter=",", header=head, comments="", fmt="%.17g")


def lower_hull_1d(x, y) -> np.ndarray:
    """Indices of the lower convex hull vertices of points sorted by ``x``.

    Collinear interior points are dropped. ``x`` must be nondecreasing; among
    equal abscissae only the lowest point can be a vertex.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    hull = []
    for i in range(len(x)):
        if hull and x[hull[-1]] == x[i]:
            if y[i] >= y[hull[-1]]:
                continue
            hull.pop()
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            # drop b unless it lies strictly below the chord a -> i
            if (y[b] - y[a]) * (x[i] - x[a]) >= (y[i] - y[a]) * (x[b] - x[a]):
                hull.pop()
            else:
                break
        hull.append(i)
    return np.array(hull, dtype=int)


def lft_1d(x, y, s) -> np.ndarray:
    """Discrete conjugate ``max_i s x_i - y_i`` at sorted slopes ``s``.

    Linear time: the maximizer moves monotonically along the lower hull as
    the slope increases. ``x`` and ``s`` must be sorted ascending.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    s = np.asarray(s, float)
    idx = lower_hull_1d(x, y)
    hx, hy = x[idx], y[idx]
    edge = np.diff(hy) / np.diff(hx) if len(idx) > 1 else np.zeros(0)
    out = np.empty_like(s)
    k = 0
    for q, sq in enumerate(s):
        while k < len(edge) and edge[k] < sq:
            k += 1
        out[q] = sq * hx[k] - hy[k]
    return out


def conjugate(g: GridFunction, dual_axes) -> np.ndarray:
    """Discrete Legendre transform of ``g`` on the tensor lattice ``dual_axes``.

    Computed separably: ``g*(s) = max_{x_1} s_1 x_1 + max_{x_2} ...``, with
    one linear-time 1-D transform per grid line. Exact at lattice slopes.
    Extra scattered nodes are folded in directly.
    """
    spec = g.spec
    axes = spec.axes
    duals = [np.sort(np.asarray(a, float)) for a in dual_axes]
    if len(duals) != spec.dim:
        raise GridError("one dual axis per primal axis")
    v = g.values
    sign = 1.0
    for k in reversed(range(spec.dim)):
        v = np.moveaxis(v, k, -1)
        lines = (sign * v).reshape(-1, v.shape[-1])
        out = np.array([lft_1d(axes[k], line, duals[k]) for line in lines])
        v = np.moveaxis(out.reshape(v.shape[:-1] + (len(duals[k]),)), -1, k)
        sign = -1.0
    if len(g.extra_points):
        S = np.stack([m.ravel() for m in np.meshgrid(*duals, indexing="ij")], axis=1)
        ext = max_affine(S, g.extra_points, g.extra_values)
        v = np.maximum(v, ext.reshape(v.shape))
    return v


def max_affine(Y, S, t, chunk: int | None = None, argmax: bool = False):
    """``max_j <S_j, y> - t_j`` for every row ``y`` of ``Y``.

    Rows are processed in chunks sized to keep the work array near 32 MB.
    With ``argmax=True`` the index of the first maximizing plane is returned too.
    """
    Y = np.atleast_2d(Y)
    t = np.asarray(t, float).reshape(-1)
    S = np.asarray(S, float).reshape(len(t), -1)
    if chunk is None:
        chunk = max(1, 4_000_000 // max(1, len(t)))
    out = np.empty(len(Y))
    idx = np.empty(len(Y), dtype=int) if argmax else None
    for a in range(0, len(Y), chunk):
        p = Y[a:a + chunk] @ S.T - t
        if argmax:
            idx[a:a + chunk] = p.argmax(axis=1)
            out[a:a + chunk] = p[np.arange(len(p)), idx[a:a + chunk]]
        else:
            out[a:a + chunk] = p.max(axis=1)
    return (out, idx) if argmax else out


def _near_node_mask(spec: GridSpec, pts: np.ndarray) -> np.ndarray:
    """Grid nodes within a quarter cell of one of ``pts`` (to be dropped)."""
    drop = np.zeros(spec.shape, dtype=bool)
    if len(pts) == 0:
        return drop
    sp = spec.spacing
    lo = np.array(spec.lo)
    for p in pts:
        idx = np.rint((p - lo) / sp).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(spec.counts)):
            continue
        node = lo + idx * sp
        if np.all(np.abs(node - p) <= sp / 4):
            drop[tuple(idx)] = True
    return drop


@dataclass
class EnvelopeResult:
    H: GridFunction
    slopes: np.ndarray
    intercepts: np.ndarray
    truncated: bool

    def __iter__(self):
        return iter((self.H, (self.slopes, self.intercepts)))


def _dedupe_planes(S, t):
    key = np.c_[S, t]
    scale = np.maximum(1.0, np.abs(key).max(axis=0))
    _, first = np.unique(np.round(key / scale, 11), axis=0, return_index=True)
    first.sort()
    return S[first], t[first]


def _hull_planes(P, v):
    """Lower-hull facet planes ``z = <s, y> - t`` and the lower-hull vertex mask."""
    n, d = P.shape
    if d == 1:
        order = np.argsort(P[:, 0], kind="stable")
        idx = order[lower_hull_1d(P[order, 0], v[order])]
        x, y = P[idx, 0], v[idx]
        s = np.diff(y) / np.diff(x)
        t = s * x[:-1] - y[:-1]
        if len(idx) == 1:
            s, t = np.zeros(1), -y
        vert = np.zeros(n, bool)
        vert[idx] = True
        return s[:, None], t, vert
    center = P.mean(axis=0)
    span = np.abs(P - center).max(axis=0)
    span[span == 0] = 1.0
    vc = v.mean()
    vs = max(float(np.abs(v - vc).max()), 1e-300)
    Z = np.c_[(P - center) / span, (v - vc) / vs]
    try:
        hull = ConvexHull(Z)
    except QhullError:
        A = np.c_[P, np.ones(n)]
        coef, *_ = np.linalg.lstsq(A, v, rcond=None)
        return coef[None, :d], np.array([-coef[d]]), np.zeros(n, bool)
    eq = hull.equations
    low = eq[:, d] < -1e-12
    eq = eq[low]
    # undo the normalization: in scaled coords z' = <s', y'> - t'
    s_sc = -eq[:, :d] / eq[:, [d]]
    t_sc = eq[:, d + 1] / eq[:, d]
    s = s_sc * vs / span
    t = vs * t_sc - vc + s @ center
    vert = np.zeros(n, bool)
    vert[np.unique(hull.simplices[low])] = True
    return s, t, vert


def biconjugate(g: GridFunction, dual_radius: float | None = None,
                dual_counts=None) -> EnvelopeResult:
    """Convex envelope of ``g`` and the affine planes generating it.

    Returns ``H`` on the same nodes (grid and extras) with ``H <= g``, plus
    planes ``(s, t)`` such that ``H(y) = max_j <s_j, y> - t_j`` on the grid box.
    With ``dual_radius = L`` only slopes in ``[-L, L]^d`` are kept, the missing
    part of the box being filled with planes at lattice slopes on its boundary,
    so every plane of ``H`` has ``|s|_inf <= L``.
    """
    spec = g.spec
    d = spec.dim
    drop = _near_node_mask(spec, g.extra_points).ravel()
    nodes = spec.nodes()
    P = np.vstack([nodes[~drop], g.extra_points])
    v = np.concatenate([g.values.ravel()[~drop], g.extra_values])
    S, t, vert = _hull_planes(P, v)
    S, t = _dedupe_planes(S, t)
    truncated = False
    if dual_radius is not None:
        L = float(dual_radius)
        if not L > 0:
            raise ValueError("dual radius must be positive")
        keep = np.abs(S).max(axis=1) <= L * (1 + 1e-12)
        truncated = not np.all(keep)
        Sb, tb = _boundary_lattice_planes(g, L, dual_counts)
        S = np.vstack([S[keep], Sb])
        t = np.concatenate([t[keep], tb])
    allP = np.vstack([nodes, g.extra_points])
    allv = np.concatenate([g.values.ravel(), g.extra_values])
    Hv = allv.copy()
    is_vert = np.zeros(len(allP), bool)
    kept_idx = np.concatenate([np.nonzero(~drop)[0], len(nodes) + np.arange(len(g.extra_points))])
    is_vert[kept_idx[vert]] = True
    if truncated:
        Hv = max_affine(allP, S, t)
    else:
        rest = ~is_vert
        if rest.any():
            Hv[rest] = max_affine(allP[rest], S, t)
    Hv = np.minimum(Hv, allv)
    M = len(nodes)
    H = GridFunction(spec, Hv[:M], g.extra_points, Hv[M:])
    return EnvelopeResult(H, S, t, truncated)


def _boundary_lattice_planes(g: GridFunction, L: float, dual_counts=None):
    spec = g.spec
    counts = spec.counts if dual_counts is None else \
        tuple(np.broadcast_to(np.asarray(dual_counts, int), (spec.dim,)))
    duals = [np.linspace(-L, L, max(2, int(c))) for c in counts]
    gs = conjugate(g, duals)
    mesh = np.meshgrid(*duals, indexing="ij")
    S = np.stack([m.ravel() for m in mesh], axis=1)
    on_bd = np.isclose(np.abs(S), L).any(axis=1)
    return S[on_bd], gs.ravel()[on_bd]


def is_convex_along_lines(H: GridFunction, atol: float = 1e-9) -> bool:
    """Second differences of the grid part along every axis are >= -atol*scale."""
    V = H.values
    scale = max(1.0, float(np.abs(V).max()))
    for k, h in enumerate(H.spec.spacing):
        d2 = np.diff(V, 2, axis=k)
        if d2.size and d2.min() < -atol * scale:
            return False
    return True


__all__ = ["EnvelopeResult", "GridError", "GridFunction", "GridSpec", "biconjugate",
           "conjugate", "is_convex_along_lines", "lft_1d", "lower_hull_1d", "max_affine"]
