"""Evaluable C^1-type convex extensions of validated jets.

The pipeline projects the (augmented) data onto ``X``, builds a smooth jet
interpolant and a majorant of the reduced minimal extension that matches the
jets, takes its convex envelope on a grid, and lifts the result back:
``F(x) = H(P_X x) + <v*, x>``, floored by the minimal extension ``m*``.
"""
from __future__ import annotations

import base64
import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .envelope import GridFunction, GridSpec, biconjugate, max_affine
from .jets import DEFAULT_TOL, JetDataset, JetError, Subspace, Tolerances
from .minimal import Decomposition, PolyhedralConvex, build_minimal, decompose, recenter
from .validator import ValidationReport, Verdict, augmented, validate


class ProjectionCollision(JetError):
    """Two data share a projection onto X but disagree in value or gradient."""


class JetMismatch(RuntimeError):
    """The majorant does not reproduce the data jets."""


class BuildError(RuntimeError):
    """The assembled model misses the data by more than the allowed residual."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class ExtensionRejected(RuntimeError):
    """The validator rejected the dataset; the report is attached."""

    def __init__(self, report: ValidationReport):
        super().__init__(f"dataset rejected: {[t for t, _ in report.failed_conditions]}")
        self.report = report


@dataclass
class ProjectedData:
    """Data expressed in coordinates of an orthonormal basis ``B`` of ``X``.

    ``h_i = f_i - <v*, x_i>`` and ``dh_i = B (g_i - v*)``.
    """

    A: np.ndarray
    h: np.ndarray
    dh: np.ndarray
    source: list
    basis: np.ndarray
    v_star: np.ndarray

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def minimal(self) -> PolyhedralConvex:
        """Reduced minimal extension ``y -> max_i h_i + <dh_i, y - a_i>``."""
        return PolyhedralConvex(self.dh, self.h - np.einsum("ij,ij->i", self.dh, self.A))


def project_data(ds: JetDataset, v_star, X: Subspace, tol: Tolerances = DEFAULT_TOL) -> ProjectedData:
    """Project jets onto ``X`` after removing the linear part ``v*``.

    Gradients must satisfy ``g_i - v* in X``. Points with equal projections
    are merged when their reduced jets agree.
    """
    v_star = np.asarray(v_star, float)
    B = X.basis
    R = ds.G - v_star
    if X.dim < ds.dim:
        resid = R - X.embed(X.coords(R))
        if np.abs(resid).max() > 1e-7 * (1 + np.abs(ds.G).max()):
            raise JetError("gradients minus v* do not lie in X")
    A = ds.X @ B.T
    h = ds.F - ds.X @ v_star
    dh = R @ B.T
    n = len(ds)
    keep = np.ones(n, bool)
    groups = [[i] for i in range(n)]
    if n > 1 and B.shape[0]:
        scale = max(1.0, float(np.abs(A).max()))
        for i in range(n):
            if not keep[i]:
                continue
            close = np.nonzero(np.linalg.norm(A[i + 1:] - A[i], axis=1) <= tol.tol_pt * scale)[0] + i + 1
            for j in close:
                if not keep[j]:
                    continue
                if abs(h[i] - h[j]) > tol.tol_grad * (1 + abs(h[i])) or \
                        np.linalg.norm(dh[i] - dh[j]) > tol.tol_grad * (1 + np.linalg.norm(dh[i])):
                    raise ProjectionCollision(f"jets {i} and {j} collide on X with different data")
                keep[j] = False
                groups[i].append(int(j))
    elif n > 1:
        if np.ptp(h) > tol.tol_grad * (1 + np.abs(h).max()):
            raise ProjectionCollision("X = {0} but reduced values differ")
        keep[1:] = False
        groups[0] = list(range(n))
    return ProjectedData(A[keep], h[keep], dh[keep], [groups[i] for i in np.nonzero(keep)[0]],
                         B.copy(), v_star.copy())


def shepard_jet_interpolant(P: ProjectedData, Q, power: int = 4):
    """Inverse-distance blend of the first-order Taylor polynomials.

    ``h~(y) = sum w_i T_i(y) / sum w_i`` with ``w_i = |y - a_i|^-power``.
    Returns values and gradients at the rows of ``Q``; at a datum both are
    reproduced exactly.
    """
    Q = np.atleast_2d(np.asarray(Q, float))
    A, h, dh = P.A, P.h, P.dh
    R = Q[:, None, :] - A[None, :, :]          # (M, N, k)
    T = h[None, :] + np.einsum("mnk,nk->mn", R, dh)
    d2 = np.einsum("mnk,mnk->mn", R, R)
    dmin = d2.min(axis=1, keepdims=True)
    hit = dmin[:, 0] == 0
    safe = np.where(hit[:, None], 1.0, dmin)
    # normalized weights avoid overflow close to the data
    w = (safe / np.where(d2 == 0, np.inf, d2)) ** (power / 2)
    w[hit] = (d2[hit] == 0).astype(float)
    W = w.sum(axis=1)
    val = (w * T).sum(axis=1) / W
    # gradient: sum (dw T + w dh)/W - val sum dw / W, dw_i = -power w_i R_i / d2_i
    with np.errstate(divide="ignore", invalid="ignore"):
        coef = np.where(d2 > 0, -power * w / d2, 0.0)
    dw = coef[:, :, None] * R
    grad = (np.einsum("mnk,mn->mk", dw, T) + np.einsum("mn,nk->mk", w, dh)) / W[:, None] \
        - val[:, None] * dw.sum(axis=1) / W[:, None]
    if hit.any():
        i = d2[hit].argmin(axis=1)
        val[hit] = h[i]
        grad[hit] = dh[i]
    return val, grad


def distance_surrogate(A, Q) -> np.ndarray:
    """``delta(y) = (sum_i |y - a_i|^-2)^-1``: smooth off the data, zero on it,
    and at most the squared distance to the nearest datum."""
    Q = np.atleast_2d(np.asarray(Q, float))
    d2 = ((Q[:, None, :] - A[None, :, :]) ** 2).sum(-1)
    dmin = d2.min(axis=1)
    out = np.zeros(len(Q))
    pos = dmin > 0
    out[pos] = dmin[pos] / (dmin[pos, None] / d2[pos]).sum(axis=1)
    return out


def majorant_fn(P: ProjectedData, mode: str = "max", interpolant=None):
    """The function ``g`` with ``g >= h``, ``g = h`` and ``grad g = grad h`` on the data.

    ``mode="max"`` gives ``max(h~, h) + 2 delta``; ``mode="literal"`` gives
    ``h~ + sqrt((h - h~)^2 + delta^2) + 2 delta``.
    """
    c = P.minimal()
    interp = interpolant or (lambda Q: shepard_jet_interpolant(P, Q)[0])
    if mode not in ("max", "literal"):
        raise ValueError(f"unknown majorant mode {mode!r}")

    def g(Q):
        Q = np.atleast_2d(Q)
        step = max(1, 2_000_000 // (len(P.A) * P.dim))
        if len(Q) > step:
            return np.concatenate([g(Q[a:a + step]) for a in range(0, len(Q), step)])
        ht = interp(Q)
        hv = c(Q)
        dl = distance_surrogate(P.A, Q)
        if mode == "max":
            return np.maximum(ht, hv) + 2 * dl
        return ht + np.sqrt((hv - ht) ** 2 + dl ** 2) + 2 * dl

    return g


def check_jets(P: ProjectedData, g, step: float = 1e-5, rtol: float = 1e-4) -> tuple[float, float]:
    """Value and centered-difference gradient mismatch of ``g`` at the data.

    Raises :class:`JetMismatch` when either exceeds its tolerance.
    """
    K = 1.0 + float(np.abs(P.dh).max(initial=0.0))
    val_err = float(np.abs(g(P.A) - P.h).max())
    k = P.dim
    grad = np.empty_like(P.dh)
    for j in range(k):
        e = np.zeros(k)
        e[j] = step
        grad[:, j] = (g(P.A + e) - g(P.A - e)) / (2 * step)
    grad_err = float(np.abs(grad - P.dh).max())
    if val_err > 1e-10 * (1 + np.abs(P.h).max()) or grad_err > rtol * K:
        raise JetMismatch(f"majorant misses the jets: value {val_err:.2e}, gradient {grad_err:.2e}")
    return val_err, grad_err


def build_majorant(P: ProjectedData, spec: GridSpec, mode: str = "max",
                   interpolant=None, check: bool = True) -> GridFunction:
    """Sample the majorant on ``spec``; data points are added as extra nodes."""
    if not spec.contains(P.A):
        raise ValueError("grid box does not contain the projected data")
    g = majorant_fn(P, mode, interpolant)
    if check:
        check_jets(P, g)
    return GridFunction(spec, g(spec.nodes()), P.A, P.h.copy())


@dataclass
class ExtensionModel:
    """``F(x) = max(max_j <s_j, P_X x> - t_j, m*(x) - <v*, x>) + <v*, x>``.

    Envelope planes come first, then the guard pieces; ``pieces`` holds all of
    them in ambient coordinates.
    """

    basis: np.ndarray
    v_star: np.ndarray
    env_slopes: np.ndarray
    env_intercepts: np.ndarray
    guard: PolyhedralConvex
    lip_bound: float
    spec: GridSpec | None = None
    report: dict = field(default_factory=dict)

    def __post_init__(self):
        B = np.asarray(self.basis, float).reshape(-1, len(self.v_star))
        self.basis = B
        S = np.asarray(self.env_slopes, float)
        S = S.reshape(-1, B.shape[0]) if B.shape[0] else np.zeros((0, 0))
        self.env_slopes = S
        self.env_intercepts = np.asarray(self.env_intercepts, float).reshape(-1)
        if len(S):
            full = S @ B + self.v_star
            slopes = np.vstack([full, self.guard.slopes])
            offsets = np.concatenate([-self.env_intercepts, self.guard.offsets])
        else:
            slopes, offsets = self.guard.slopes, self.guard.offsets
        self.pieces = PolyhedralConvex(slopes, offsets)

    @property
    def dim(self) -> int:
        return len(self.v_star)

    @property
    def X(self) -> Subspace:
        return Subspace(self.dim, self.basis)

    def values(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, float))
        return max_affine(x, self.pieces.slopes, -self.pieces.offsets)

    def eval(self, x):
        """Value and a subgradient; ties go to the lowest plane index."""
        x = np.asarray(x, float)
        X = x.reshape(-1, self.dim)
        vals = np.empty(len(X))
        grads = np.empty_like(X)
        S, b = self.pieces.slopes, self.pieces.offsets
        step = max(1, 4_000_000 // len(b))
        for a in range(0, len(X), step):
            p = X[a:a + step] @ S.T + b
            top = p.max(axis=1)
            tie = 1e-12 * np.maximum(1.0, np.abs(top))
            idx = (p >= (top - tie)[:, None]).argmax(axis=1)
            vals[a:a + step] = top
            grads[a:a + step] = S[idx]
        if x.ndim == 1:
            return float(vals[0]), grads[0]
        return vals, grads

    __call__ = values

    def to_dict(self) -> dict:
        table = np.c_[self.env_slopes, self.env_intercepts].astype("<f8")
        return {
            "format": "convexjet-model/1",
            "dim": self.dim,
            "X": self.basis.tolist(),
            "v_star": self.v_star.tolist(),
            "lip_bound": self.lip_bound,
            "grid": None if self.spec is None else self.spec.to_dict(),
            "report": self.report,
            "planes": {"count": int(len(table)), "columns": int(table.shape[1]),
                       "dtype": "<f8", "data": base64.b64encode(table.tobytes()).decode()},
            "guard": self.guard.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExtensionModel":
        pl = d["planes"]
        raw = np.frombuffer(base64.b64decode(pl["data"]), dtype=pl.get("dtype", "<f8"))
        table = raw.reshape(pl["count"], pl["columns"]) if pl["count"] else np.zeros((0, pl["columns"]))
        n = int(d["dim"])
        B = np.asarray(d["X"], float).reshape(-1, n)
        return cls(B, np.asarray(d["v_star"], float), table[:, :-1], table[:, -1],
                   PolyhedralConvex.from_dict(d["guard"]), float(d["lip_bound"]),
                   None if d.get("grid") is None else GridSpec.from_dict(d["grid"]),
                   d.get("report", {}))

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    @classmethod
    def load(cls, path) -> "ExtensionModel":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def assemble_model(env_slopes, env_intercepts, basis, v_star, guard: PolyhedralConvex,
                   dual_radius: float | None = None, spec: GridSpec | None = None) -> ExtensionModel:
    """Lift envelope planes to ambient space and attach the guard.

    ``lip_bound`` is ``L sqrt(k) + |v*|`` under truncation at ``L`` and the
    largest plane slope otherwise, never below the guard's own constant.
    """
    v_star = np.asarray(v_star, float)
    k = np.asarray(basis).reshape(-1, len(v_star)).shape[0]
    model = ExtensionModel(basis, v_star, env_slopes, env_intercepts, guard, 0.0, spec)
    if dual_radius is not None and k:
        lip = max(dual_radius * np.sqrt(k) + np.linalg.norm(v_star), guard.lipschitz())
    else:
        lip = model.pieces.lipschitz()
    model.lip_bound = float(lip)
    return model


def residuals(model: ExtensionModel, ds: JetDataset, step: float) -> dict:
    """Value and centered-difference gradient residuals at the data."""
    val = np.abs(model.values(ds.X) - ds.F)
    n = ds.dim
    grad = np.empty_like(ds.G)
    for j in range(n):
        e = np.zeros(n)
        e[j] = step
        grad[:, j] = (model.values(ds.X + e) - model.values(ds.X - e)) / (2 * step)
    gerr = np.linalg.norm(grad - ds.G, axis=1)
    return {"value": float(val.max()), "gradient": float(gerr.max()),
            "value_per_datum": val.tolist(), "gradient_per_datum": gerr.tolist(), "step": step}


@dataclass
class BuildResult:
    model: ExtensionModel
    validation: ValidationReport
    projected: ProjectedData
    majorant: GridFunction | None
    envelope: GridFunction | None
    report: dict


def build_extension(ds: JetDataset, X: Subspace | None = None, grid=None,
                    dual_radius="auto", tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                    mode: str = "max", pad: float = 0.1, check: bool = True,
                    residual_factor: float = 10.0) -> BuildResult:
    """Validate, augment if needed, and build an evaluable convex extension.

    Parameters
    ----------
    grid : int or sequence of int, optional
        Nodes per axis of ``X``. Defaults depend on ``dim X``.
    dual_radius : "auto", float or None
        Slope box half-width for the envelope. ``"auto"`` uses ``3 K`` with
        ``K`` the largest data gradient norm; ``None`` disables truncation.
    check : bool
        Raise :class:`BuildError` when the value residual at the data exceeds
        ``residual_factor * h_grid * (1 + K)``.
    """
    rep = validate(ds, X, tol, seed)
    if rep.verdict is Verdict.REJECTED:
        raise ExtensionRejected(rep)
    aug = augmented(ds, rep.plan)
    m_star = build_minimal(aug, check=True, tol=tol)
    dec = decompose(m_star, tol)
    if dec.Y.dim:
        dec = recenter(dec)
    Xs = rep.chosen_X
    K = float(np.linalg.norm(ds.G, axis=1).max())
    P = project_data(aug, dec.v, Xs, tol)
    report = {"verdict": rep.verdict.value, "dim_X": Xs.dim, "K": K,
              "augmented_jets": 0 if rep.plan is None else len(rep.plan.added_jets)}
    if Xs.dim == 0:
        model = assemble_model(np.zeros((0, 0)), np.zeros(0), np.zeros((0, ds.dim)), dec.v, m_star)
        report.update({"h_grid": 0.0, "dual_radius": None, "truncated": False})
        report["residuals"] = residuals(model, ds, 1e-6 * (1 + np.abs(ds.X).max()))
        model.report = report
        return BuildResult(model, rep, P, None, None, report)
    k = Xs.dim
    if grid is None:
        grid = {1: 1001, 2: 129, 3: 33}.get(k, 13)
    spec = GridSpec.covering(P.A, grid, pad=pad)
    g = build_majorant(P, spec, mode)
    L = None
    if dual_radius == "auto":
        L = 3.0 * max(K, 1e-12)
    elif dual_radius is not None:
        L = float(dual_radius)
    if L is not None and np.abs(P.dh).max() > L:
        warnings.warn(f"data slopes reach {np.abs(P.dh).max():.3g} > dual radius {L:.3g}; "
                      "the model cannot match those gradients", RuntimeWarning, stacklevel=2)
    env = biconjugate(g, L)
    model = assemble_model(env.slopes, env.intercepts, Xs.basis, dec.v, m_star, L, spec)
    h = spec.h_grid
    report.update({"h_grid": h, "grid": spec.to_dict(), "dual_radius": L,
                   "truncated": env.truncated, "planes": int(len(env.intercepts)),
                   "lip_bound": model.lip_bound})
    res = residuals(model, ds, h / 2)
    report["residuals"] = res
    report["value_threshold"] = residual_factor * h * (1 + K)
    model.report = {k_: v for k_, v in report.items() if k_ != "residuals"} | {
        "residual_value": res["value"], "residual_gradient": res["gradient"]}
    if check and res["value"] > report["value_threshold"]:
        raise BuildError(f"value residual {res['value']:.3e} exceeds {report['value_threshold']:.3e}",
                         report)
    return BuildResult(model, rep, P, g, env.H, report)


__all__ = ["BuildError", "BuildResult", "ExtensionModel", "ExtensionRejected", "JetMismatch",
           "ProjectedData", "ProjectionCollision", "assemble_model", "build_extension",
           "build_majorant", "check_jets", "distance_surrogate", "majorant_fn", "project_data",
           "residuals", "shepard_jet_interpolant"]
