"""Convex hypersurfaces through points with prescribed outward normals.

Given points ``x_i`` with unit normals ``N_i``, the jet ``f(0) = 0, G(0) = 0``
and ``f(x_i) = 1, G(x_i) = (2/r) N_i`` with ``r`` below ``min <N_i, x_i>`` is
extended to a convex ``F``; the body is ``W = {F <= 1}`` and its boundary is
extracted with marching squares or marching cubes.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from skimage import measure

from .extender import BuildResult, ExtensionModel, build_extension
from .jets import DEFAULT_TOL, JetDataset, JetError, Tolerances
from .validator import check_convexity, check_cw1


class SurfaceError(ValueError):
    """Normal data violate the conditions needed for a convex body."""


@dataclass(frozen=True)
class NormalDataset:
    """Points ``X`` (m, n) with outward unit normals ``N`` (m, n)."""

    X: np.ndarray
    N: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, float))
        N = np.atleast_2d(np.asarray(self.N, float))
        if X.shape != N.shape or X.size == 0:
            raise JetError("points and normals must be nonempty arrays of equal shape")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(N))):
            raise JetError("non-finite entries")
        if np.abs(np.linalg.norm(N, axis=1) - 1).max() > 1e-9:
            raise JetError("normals must have unit length")
        d2 = ((X[:, None] - X[None]) ** 2).sum(-1) + np.eye(len(X))
        if d2.min() <= 1e-24 * max(1.0, float(np.abs(X).max())) ** 2:
            raise JetError("points must be distinct")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "N", N)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self):
        return len(self.X)


@dataclass
class NormalReport:
    halfspace_ok: bool
    max_violation: float
    r_inf: float
    origin_ok: bool
    cw1_ok: bool | None
    offending: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.halfspace_ok and self.origin_ok and bool(self.cw1_ok)


def check_normal_conditions(nd: NormalDataset, tol: float = 1e-9) -> NormalReport:
    """Supporting half-spaces, origin containment and the induced equality test.

    Every point must satisfy ``<N_j, x_i - x_j> <= 0`` for all ``j``, and
    ``r_inf = min <N_i, x_i>`` must be positive.
    """
    X, N = nd.X, nd.N
    S = np.einsum("jd,ijd->ij", N, X[:, None, :] - X[None, :, :])
    scale = max(1.0, float(np.abs(X).max()))
    worst = float(S.max())
    bad = np.argwhere(S > tol * scale)
    r_inf = float(np.einsum("id,id->i", N, X).min())
    rep = NormalReport(bad.size == 0, worst, r_inf, r_inf > 0, None,
                       [(int(i), int(j)) for i, j in bad[:20]])
    if rep.origin_ok:
        ds = _jet(nd, 0.9 * r_inf)
        conv = check_convexity(ds)
        rep.cw1_ok = conv.passed and check_cw1(ds, conv.D).passed
    return rep


def _jet(nd: NormalDataset, r: float) -> JetDataset:
    n = nd.dim
    X = np.vstack([np.zeros(n), nd.X])
    F = np.r_[0.0, np.ones(len(nd))]
    G = np.vstack([np.zeros(n), (2.0 / r) * nd.N])
    return JetDataset(X, F, G)


def build_surface_jet(nd: NormalDataset, tol: float = 1e-9) -> tuple[JetDataset, float]:
    """Jet with an origin datum and ``(x_i, 1, (2/r) N_i)``, where ``r = 0.9 r_inf``."""
    rep = check_normal_conditions(nd, tol)
    if not rep.origin_ok:
        raise SurfaceError(f"origin is not strictly inside: min <N, x> = {rep.r_inf:.3g}")
    if not rep.halfspace_ok:
        raise SurfaceError(f"points violate supporting half-spaces, e.g. pairs {rep.offending[:3]}")
    r = 0.9 * rep.r_inf
    return _jet(nd, r), r


@dataclass
class SurfaceMesh:
    """Polyline segments (2-D) or triangles (3-D) of a level set."""

    vertices: np.ndarray
    facets: np.ndarray
    normals: np.ndarray
    level: float
    clipped: bool = False
    unbounded: bool = False
    residual: float = 0.0

    @property
    def dim(self) -> int:
        return self.vertices.shape[1]

    def is_watertight(self) -> bool:
        """Every edge of a triangle mesh, or vertex of a polyline, is shared twice."""
        if len(self.facets) == 0:
            return False
        F = np.asarray(self.facets)
        if self.dim == 2:
            _, cnt = np.unique(F.ravel(), return_counts=True)
            return bool(np.all(cnt == 2))
        E = np.sort(np.vstack([F[:, [0, 1]], F[:, [1, 2]], F[:, [0, 2]]]), axis=1)
        _, cnt = np.unique(E, axis=0, return_counts=True)
        return bool(np.all(cnt == 2))

    def to_obj(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(f"# level {self.level!r}\n")
            for v in self.vertices:
                fh.write("v " + " ".join(f"{c:.17g}" for c in v) + "\n")
            for nv in self.normals:
                fh.write("vn " + " ".join(f"{c:.17g}" for c in nv) + "\n")
            if self.dim == 3:
                for f in self.facets + 1:
                    fh.write("f " + " ".join(f"{i}//{i}" for i in f) + "\n")
            else:
                for f in self.facets + 1:
                    fh.write("l " + " ".join(str(i) for i in f) + "\n")

    def to_csv(self, path) -> None:
        """Segments as rows ``x0, y0, x1, y1``; vertices with normals for 3-D."""
        if self.dim == 2:
            A = np.c_[self.vertices[self.facets[:, 0]], self.vertices[self.facets[:, 1]]]
            np.savetxt(path, A, delimiter=",", header="x0,y0,x1,y1", comments="", fmt="%.17g")
        else:
            A = np.c_[self.vertices, self.normals]
            np.savetxt(path, A, delimiter=",", header="x,y,z,nx,ny,nz", comments="", fmt="%.17g")


def _refine(model: ExtensionModel, a: np.ndarray, b: np.ndarray, fa, fb, level: float,
            tol: float, max_iter: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Illinois regula falsi on segments ``[a, b]`` for ``F = level``."""
    fa = fa - level
    fb = fb - level
    lo = np.zeros(len(a))
    hi = np.ones(len(a))
    d = fa - fb
    t = np.where(d != 0, fa / np.where(d != 0, d, 1), 0.5)
    x = a + t[:, None] * (b - a)
    fx = model.values(x) - level
    side = np.zeros(len(a), int)
    for _ in range(max_iter):
        act = np.abs(fx) > tol
        if not act.any():
            break
        i = np.nonzero(act)[0]
        left = np.sign(fx[i]) == np.sign(fa[i])
        # keep the bracket [lo, hi] with a sign change
        lo[i] = np.where(left, t[i], lo[i])
        fa[i] = np.where(left, fx[i], fa[i])
        hi[i] = np.where(left, hi[i], t[i])
        fb[i] = np.where(left, fb[i], fx[i])
        # Illinois: halve the stale endpoint when the same side repeats
        same = np.where(left, 1, -1)
        fb[i] = np.where(left & (side[i] == 1), fb[i] / 2, fb[i])
        fa[i] = np.where(~left & (side[i] == -1), fa[i] / 2, fa[i])
        side[i] = same
        denom = fa[i] - fb[i]
        tn = np.where(denom != 0, lo[i] + (hi[i] - lo[i]) * fa[i] / np.where(denom != 0, denom, 1), 0.5 * (lo[i] + hi[i]))
        tn = np.clip(tn, lo[i], hi[i])
        t[i] = tn
        x[i] = a[i] + tn[:, None] * (b[i] - a[i])
        fx[i] = model.values(x[i]) - level
    return x, fx


def extract_levelset(model: ExtensionModel, level: float = 1.0, box=None, resolution=None,
                     tol: float = 1e-6) -> SurfaceMesh:
    """Level set ``{F = level}`` on a box, refined onto the exact level.

    ``box`` is ``(lo, hi)`` in ambient coordinates; by default the model's
    grid box is used when ``X`` is the whole space. Vertices are moved along
    their grid edges until ``|F - level| <= tol``. Normals are normalized
    subgradients.
    """
    n = model.dim
    if n not in (2, 3):
        raise ValueError("level sets are extracted in dimensions 2 and 3 only")
    if resolution is None:
        resolution = 129 if n == 2 else 33
    if box is None:
        if model.spec is None:
            raise ValueError("need an extraction box")
        # ambient box containing the model's grid box
        corners = np.array(np.meshgrid(*zip(model.spec.lo, model.spec.hi), indexing="ij")).reshape(
            model.basis.shape[0], -1).T @ model.basis
        box = (corners.min(axis=0), corners.max(axis=0))
    lo = np.asarray(box[0], float) * np.ones(n)
    hi = np.asarray(box[1], float) * np.ones(n)
    counts = np.broadcast_to(np.asarray(resolution, int), (n,))
    axes = [np.linspace(lo[k], hi[k], counts[k]) for k in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([m.ravel() for m in mesh], axis=1)
    V = model.values(nodes).reshape(tuple(counts))
    if not (V.min() < level < V.max()):
        raise ValueError(f"level {level} outside the sampled range [{V.min():.3g}, {V.max():.3g}]")
    sp = (hi - lo) / (counts - 1)
    if n == 2:
        verts, segs = [], []
        for c in measure.find_contours(V, level):
            closed = len(c) > 2 and np.allclose(c[0], c[-1])
            if closed:
                c = c[:-1]
            base = len(verts) and sum(len(v) for v in verts)
            idx = np.arange(len(c)) + base
            segs.append(np.c_[idx[:-1], idx[1:]])
            if closed:
                segs.append(np.array([[idx[-1], idx[0]]]))
            verts.append(c)
        U = np.vstack(verts)
        facets = np.vstack(segs).astype(int)
    else:
        U, facets, _, _ = measure.marching_cubes(V, level)
        facets = facets.astype(int)
    # each vertex lies on a grid edge: find the fractional axis
    frac = np.abs(U - np.rint(U))
    k = frac.argmax(axis=1)
    ia = np.rint(U).astype(int)
    ia[np.arange(len(U)), k] = np.floor(U[np.arange(len(U)), k]).astype(int)
    ia = np.clip(ia, 0, counts - 1)
    ib = ia.copy()
    ib[np.arange(len(U)), k] = np.minimum(ia[np.arange(len(U)), k] + 1, counts[k] - 1)
    a = lo + ia * sp
    b = lo + ib * sp
    fa = V[tuple(ia.T)]
    fb = V[tuple(ib.T)]
    x, fx = _refine(model, a, b, fa, fb, level, tol)
    _, grads = model.eval(x)
    nrm = np.linalg.norm(grads, axis=1, keepdims=True)
    normals = np.divide(grads, nrm, out=np.zeros_like(grads), where=nrm > 0)
    edge = np.zeros(V.shape, bool)
    for ax in range(n):
        sl = [slice(None)] * n
        sl[ax] = [0, -1]
        edge[tuple(sl)] = True
    clipped = bool(np.any(V[edge] <= level))
    return SurfaceMesh(x, facets, normals, level, clipped, model.basis.shape[0] < n,
                       float(np.abs(fx).max()))


def build_surface(nd: NormalDataset, grid=None, resolution=None, pad: float = 0.5,
                  tol: Tolerances = DEFAULT_TOL, seed: int = 0) -> tuple[BuildResult, SurfaceMesh]:
    """Build the convex model for normal data and extract ``{F = 1}``."""
    ds, _ = build_surface_jet(nd)
    res = build_extension(ds, grid=grid, dual_radius=None, tol=tol, seed=seed, pad=pad)
    P = ds.X
    c = 0.5 * (P.min(axis=0) + P.max(axis=0))
    w = 0.5 * (P.max(axis=0) - P.min(axis=0)).max() * (1 + pad)
    mesh = extract_levelset(res.model, 1.0, (c - w, c + w), resolution)
    return res, mesh


def verify_surface(mesh: SurfaceMesh | None, nd: NormalDataset, model: ExtensionModel,
                   angle_tol: float = 5.0, value_tol: float = 1e-6, margin: float = 1e-3,
                   pairs: int = 10_000, seed: int = 0) -> dict:
    """Check incidence, normals, origin interiority and convexity of the mesh."""
    val, grad = model.eval(nd.X)
    val = np.atleast_1d(val)
    grad = np.atleast_2d(grad)
    cosang = np.einsum("id,id->i", grad, nd.N) / np.maximum(np.linalg.norm(grad, axis=1), 1e-300)
    ang = np.degrees(np.arccos(np.clip(cosang, -1, 1)))
    f0 = float(model.values(np.zeros(nd.dim))[0])
    out = {
        "value_error": float(np.abs(val - 1).max()),
        "max_angle_deg": float(ang.max()),
        "angles_deg": ang.tolist(),
        "F_origin": f0,
        "origin_interior": f0 <= 1 - margin,
    }
    ok = out["value_error"] <= value_tol and out["max_angle_deg"] <= angle_tol and out["origin_interior"]
    if mesh is not None and len(mesh.vertices) > 1:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, len(mesh.vertices), pairs)
        j = rng.integers(0, len(mesh.vertices), pairs)
        mid = 0.5 * (mesh.vertices[i] + mesh.vertices[j])
        out["midpoint_excess"] = float((model.values(mid) - mesh.level).max())
        out["mesh_residual"] = mesh.residual
        ok = ok and out["midpoint_excess"] <= 1e-6 and mesh.residual <= value_tol
    out["passed"] = bool(ok)
    return out


__all__ = ["NormalDataset", "NormalReport", "SurfaceError", "SurfaceMesh", "build_surface",
           "build_surface_jet", "check_normal_conditions", "extract_levelset", "verify_surface"]
