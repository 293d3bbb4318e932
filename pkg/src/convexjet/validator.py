"""Finite-data extendibility checks and synthesis of augmentation jets."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .jets import (DEFAULT_TOL, Jet, JetDataset, JetError, Subspace, Tolerances,
                   orthocomplement_in, span_of_differences)
from .minimal import (Decomposition, NotCoercive, PolyhedralConvex, build_minimal,
                      coercivity_minorant, decompose, recenter)


class NoConeFound(RuntimeError):
    """No apex/aperture combination keeps every cone free of data points."""


def slack_matrix(ds: JetDataset) -> np.ndarray:
    """``D[i, j] = f_i - f_j - <g_j, x_i - x_j>`` with an exact zero diagonal."""
    X, F, G = ds.X, ds.F, ds.G
    D = F[:, None] - F[None, :] - (np.einsum("id,jd->ij", X, G) - np.einsum("jd,jd->j", X, G)[None, :])
    np.fill_diagonal(D, 0.0)
    return D


def activity_threshold(ds: JetDataset, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Per-pair threshold below which a slack counts as zero.

    The relative part is proportional to the size of the terms whose
    cancellation produces the slack.
    """
    X, F, G = ds.X, ds.F, ds.G
    inner = np.abs(np.einsum("id,jd->ij", X, G) - np.einsum("jd,jd->j", X, G)[None, :])
    mag = np.abs(F)[:, None] + np.abs(F)[None, :] + inner
    return tol.tol_eq + tol.rel_eq * mag


@dataclass
class ConvexityResult:
    D: np.ndarray
    violations: list  # (i, j, D[i, j])

    @property
    def passed(self) -> bool:
        return not self.violations


def check_convexity(ds: JetDataset, tol: Tolerances = DEFAULT_TOL) -> ConvexityResult:
    """Check ``f_i >= f_j + <g_j, x_i - x_j>`` for all ordered pairs."""
    D = slack_matrix(ds)
    thr = activity_threshold(ds, tol)
    bad = np.argwhere(D < -thr)
    return ConvexityResult(D, [(int(i), int(j), float(D[i, j])) for i, j in bad])


@dataclass
class CW1Result:
    failures: list  # (i, j, slack, gap)
    warnings: list  # (i, j, slack, gap)

    @property
    def passed(self) -> bool:
        return not self.failures


def check_cw1(ds: JetDataset, D: np.ndarray | None = None, tol: Tolerances = DEFAULT_TOL) -> CW1Result:
    """Equality in the convexity inequality must force equal gradients.

    Pairs whose slack is only small (at most ``warn_threshold``) while the
    gradients are far apart are returned as conditioning warnings.
    """
    if D is None:
        D = slack_matrix(ds)
    thr = activity_threshold(ds, tol)
    gap = np.linalg.norm(ds.G[:, None, :] - ds.G[None, :, :], axis=-1)
    off = ~np.eye(len(ds), dtype=bool)
    active = (D <= thr) & off
    fail = np.argwhere(active & (gap > tol.tol_grad * (1 + np.abs(ds.G).max())))
    warn = np.argwhere(~active & off & (D <= tol.warn_threshold) & (gap > tol.warn_gap))
    return CW1Result(
        [(int(i), int(j), float(D[i, j]), float(gap[i, j])) for i, j in fail],
        [(int(i), int(j), float(D[i, j]), float(gap[i, j])) for i, j in warn],
    )


@dataclass(frozen=True)
class ConeSpec:
    """``{x : eps <w, x - p> >= |P_Y(x - p)|}``."""

    apex: np.ndarray
    axis: np.ndarray
    eps: float
    Y: Subspace

    def __post_init__(self):
        w = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(w) - 1) > 1e-12:
            raise ValueError("cone axis must be a unit vector")
        if self.Y.dim and np.abs(self.Y.coords(w)).max() > 1e-12:
            raise ValueError("cone axis must be orthogonal to Y")
        if not 0 < self.eps < 1:
            raise ValueError("aperture must lie in (0, 1)")
        object.__setattr__(self, "apex", np.asarray(self.apex, dtype=float))
        object.__setattr__(self, "axis", w)

    def margin(self, x) -> np.ndarray:
        """``|P_Y(x-p)| - eps <w, x-p>``; positive means outside the cone."""
        r = np.atleast_2d(x) - self.apex
        lat = np.linalg.norm(self.Y.coords(r), axis=1) if self.Y.dim else np.zeros(len(r))
        return lat - self.eps * (r @ self.axis)

    def to_dict(self) -> dict:
        return {"apex": self.apex.tolist(), "axis": self.axis.tolist(), "eps": self.eps}


def check_cone_empty(cone: ConeSpec, ds: JetDataset) -> tuple[bool, list]:
    """Pass iff no data point lies in the (closed) cone."""
    bad = np.nonzero(cone.margin(ds.X) <= 0)[0]
    return bad.size == 0, [int(i) for i in bad]


@dataclass
class AugmentationPlan:
    cones: list
    T: float
    alpha: float
    beta: float
    v: np.ndarray
    added: JetDataset | None

    @property
    def added_jets(self) -> list:
        return [] if self.added is None else list(self.added)

    def to_dict(self) -> dict:
        d = {"T": self.T, "alpha": self.alpha, "beta": self.beta, "v": self.v.tolist(),
             "cones": [c.to_dict() for c in self.cones]}
        if self.added is not None:
            d["jets"] = {"dim": self.added.dim, "jets": [
                {"x": j.x.tolist(), "f": j.f, "g": j.g.tolist()} for j in self.added]}
        return d


def _t_lower_bound(dec: Decomposition, alpha: float, beta: float, eps: float,
                   P: np.ndarray, W: np.ndarray) -> float:
    """Smallest ``T`` satisfying both sizing inequalities for the new jets."""
    Yc = dec.Y.coords(P) if dec.Y.dim else np.zeros((len(P), 0))
    cP = dec.c(Yc) if dec.Y.dim else np.full(len(P), dec.c.offsets.max())
    ea = eps * alpha
    first = (2 - beta - np.max(alpha * np.linalg.norm(Yc, axis=1) + cP)) / ea
    bound = first
    if len(P) > 1:
        G = W @ W.T
        sep = min(1 - G[i, j] for i in range(len(P)) for j in range(len(P)) if i != j)
        cross = max(cP[j] - cP[i] + ea * W[j] @ (P[i] - P[j])
                    for i in range(len(P)) for j in range(len(P)))
        bound = max(bound, (1 + cross) / (ea * sep))
    return float(bound)


def find_augmentation(ds: JetDataset, X: Subspace, dec: Decomposition | None = None,
                      tol: Tolerances = DEFAULT_TOL, seed: int = 0,
                      budget: int = 64, inflate: float = 1.1) -> AugmentationPlan:
    """Build extra jets forcing coercivity along ``X`` minus the gradient span.

    Cone axes are an orthonormal basis of ``X`` intersected with ``Y``-perp.
    Each apex is placed on the axis beyond the data, and the aperture halves
    from 0.5 until all cones are empty or the budget runs out. The new points
    sit at distance ``T`` along the axes from the apexes, with values exceeding
    the minimal extension by one.
    """
    m = build_minimal(ds, check=False)
    if dec is None:
        dec = decompose(m, tol)
    if not X.includes(dec.Y):
        raise JetError("X does not contain the gradient span")
    if X.dim == dec.Y.dim:
        raise ValueError("gradient span already equals X; no augmentation needed")
    dec = recenter(dec)
    if dec.Y.dim:
        cm = coercivity_minorant(dec)
        alpha, beta = cm.alpha, cm.beta
    else:
        # c is a constant; any positive slope works as the growth rate
        alpha, beta = max(dec.K, 1.0), float(dec.c.offsets.max())
    if not alpha > 0:
        raise NotCoercive("alpha <= 0")
    W = orthocomplement_in(dec.Y, X).basis
    rng = np.random.default_rng(seed)
    center = ds.X.mean(axis=0)
    extent = float(np.linalg.norm(ds.X - center, axis=1).max()) + 1.0

    cones, apexes, axes = [], [], []
    for w in W:
        found = None
        for attempt in range(budget):
            sign = 1.0 if attempt % 2 == 0 else -1.0
            ax = sign * w
            reach = float(((ds.X - center) @ ax).max())
            p = center + (reach + 0.1 * extent * (1 + attempt // 2)) * ax
            if attempt >= 2:
                jitter = rng.normal(size=ds.dim)
                jitter -= (jitter @ ax) * ax
                p = p + 0.1 * extent * jitter
            eps = 0.5
            while eps > 1e-6:
                cone = ConeSpec(p, ax, eps, dec.Y)
                if check_cone_empty(cone, ds)[0]:
                    found = cone
                    break
                eps /= 2
            if found is not None:
                break
        if found is None:
            raise NoConeFound("data surround every candidate apex")
        cones.append(found)
        apexes.append(found.apex)
        axes.append(found.axis)
    eps = min(c.eps for c in cones)
    cones = [ConeSpec(c.apex, c.axis, eps, dec.Y) for c in cones]
    P = np.array(apexes)
    Wm = np.array(axes)
    T = max(_t_lower_bound(dec, alpha, beta, eps, P, Wm), tol.tol_pos) * inflate
    while True:
        Q = P + T * Wm
        d = np.linalg.norm(Q[:, None] - Q[None], axis=-1) + np.eye(len(Q)) * 1e300
        if d.min() > 1e-9 * (1 + T):
            break
        T *= 2
    return _plan_from(ds, m, dec, cones, T, alpha, beta)


def _plan_from(ds, m, dec, cones, T, alpha, beta) -> AugmentationPlan:
    P = np.array([c.apex for c in cones])
    Wm = np.array([c.axis for c in cones])
    eps = cones[0].eps
    Q = P + T * Wm
    added = JetDataset(Q, m(Q) + 1.0, dec.v + eps * alpha * Wm)
    return AugmentationPlan(cones, float(T), float(alpha), float(beta), dec.v.copy(), added)


def with_T(plan: AugmentationPlan, ds: JetDataset, T: float) -> AugmentationPlan:
    """Same cones, different offset ``T`` (useful for probing the sizing bound)."""
    m = build_minimal(ds, check=False)
    P = np.array([c.apex for c in plan.cones])
    Wm = np.array([c.axis for c in plan.cones])
    Q = P + T * Wm
    added = JetDataset(Q, m(Q) + 1.0, plan.v + plan.cones[0].eps * plan.alpha * Wm)
    return AugmentationPlan(plan.cones, float(T), plan.alpha, plan.beta, plan.v, added)


@dataclass
class MarginReport:
    data_to_new: np.ndarray   # f(q_j) - f(x) - <G(x), q_j - x>, shape (N, J)
    new_to_data: np.ndarray   # f(x) - f(q_j) - <G(q_j), x - q_j>, shape (N, J)
    new_to_new: np.ndarray    # off-diagonal slacks among added jets
    span_ok: bool
    min_margin: float
    passed: bool


def check_new_data(ds: JetDataset, plan: AugmentationPlan, X: Subspace | None = None,
                   tol: Tolerances = DEFAULT_TOL) -> MarginReport:
    """Evaluate the three families of unit margins for the added jets."""
    if plan.added is None or len(plan.added) == 0:
        e = np.zeros((len(ds), 0))
        return MarginReport(e, e, np.zeros(0), True, np.inf, True)
    Q, fQ, GQ = plan.added.X, plan.added.F, plan.added.G
    X_, F_, G_ = ds.X, ds.F, ds.G
    a = fQ[None, :] - F_[:, None] - np.einsum("id,ijd->ij", G_, Q[None, :, :] - X_[:, None, :])
    b = F_[:, None] - fQ[None, :] - np.einsum("jd,ijd->ij", GQ, X_[:, None, :] - Q[None, :, :])
    J = len(Q)
    if J > 1:
        S = fQ[:, None] - fQ[None, :] - np.einsum("jd,ijd->ij", GQ, Q[:, None, :] - Q[None, :, :])
        c = S[~np.eye(J, dtype=bool)]
    else:
        c = np.zeros(0)
    mins = [a.min(), b.min()] + ([c.min()] if c.size else [])
    mn = float(min(mins))
    span_ok = True
    if X is not None:
        aug = ds.append(Q, fQ, GQ)
        span_ok = span_of_differences(aug, tol).equals(X, 1e-7)
    return MarginReport(a, b, c, span_ok, mn, bool(mn >= 1 - tol.tol_margin and span_ok))


class Verdict(str, Enum):
    EXTENDIBLE = "Extendible"
    AFTER_AUGMENTATION = "ExtendibleAfterAugmentation"
    REJECTED = "Rejected"


@dataclass
class ValidationReport:
    verdict: Verdict
    failed_conditions: list = field(default_factory=list)   # (tag, detail)
    conditioning_warnings: list = field(default_factory=list)  # (i, j, slack, gap)
    plan: AugmentationPlan | None = None
    chosen_X: Subspace | None = None
    checks: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict.value,
            "conditions": self.checks,
            "failed": [{"condition": t, "detail": d} for t, d in self.failed_conditions],
            "warnings": [{"i": i, "j": j, "slack": s, "grad_gap": g}
                         for i, j, s, g in self.conditioning_warnings],
            "X": None if self.chosen_X is None else self.chosen_X.basis.tolist(),
            "plan": None if self.plan is None else self.plan.to_dict(),
        }


def validate(ds: JetDataset, X: Subspace | None = None, tol: Tolerances = DEFAULT_TOL,
             seed: int = 0) -> ValidationReport:
    """Decide whether a finite jet admits a C^1 convex extension with ``X_F = X``.

    ``X`` defaults to the gradient span. On finite data the growth condition
    is vacuous and the sequence condition reduces to the pairwise equality
    test of :func:`check_cw1`.
    """
    if X is not None and X.ambient_dim != ds.dim:
        raise JetError(f"X lives in R^{X.ambient_dim}, data in R^{ds.dim}")
    Y = span_of_differences(ds, tol)
    X = Y if X is None else X
    rep = ValidationReport(Verdict.EXTENDIBLE, chosen_X=X)
    conv = check_convexity(ds, tol)
    rep.checks["convexity"] = conv.passed
    if not conv.passed:
        rep.failed_conditions.append(("convexity", conv.violations[:20]))
    cw = check_cw1(ds, conv.D, tol)
    rep.checks["cw1"] = cw.passed
    rep.conditioning_warnings = cw.warnings
    if not cw.passed:
        rep.failed_conditions.append(("cw1", [f[:2] for f in cw.failures[:20]]))
    inc = X.includes(Y, 1e-7)
    rep.checks["span_inclusion"] = inc
    if not inc:
        rep.failed_conditions.append(("span_inclusion", "gradient span is not contained in X"))
    if rep.failed_conditions:
        rep.verdict = Verdict.REJECTED
        return rep
    if X.dim > Y.dim:
        try:
            plan = find_augmentation(ds, X, None, tol, seed=seed)
        except (NoConeFound, NotCoercive) as exc:
            rep.checks["cones"] = False
            rep.failed_conditions.append(("cones", str(exc)))
            rep.verdict = Verdict.REJECTED
            return rep
        margins = check_new_data(ds, plan, X, tol)
        rep.checks["cones"] = True
        rep.checks["new_data"] = margins.passed
        if not margins.passed:
            rep.failed_conditions.append(("new_data", f"min margin {margins.min_margin:.3e}"))
            rep.verdict = Verdict.REJECTED
            return rep
        rep.plan = plan
        rep.verdict = Verdict.AFTER_AUGMENTATION
    return rep


def augmented(ds: JetDataset, plan: AugmentationPlan | None) -> JetDataset:
    """Dataset with the plan's jets appended (added jets come last)."""
    if plan is None or plan.added is None:
        return ds
    return ds.append(plan.added.X, plan.added.F, plan.added.G)


__all__ = [
    "AugmentationPlan", "ConeSpec", "MarginReport", "NoConeFound", "ValidationReport",
    "Verdict", "augmented", "check_cone_empty", "check_convexity", "check_cw1",
    "check_new_data", "find_augmentation", "slack_matrix", "validate", "with_T", "Jet",
    "PolyhedralConvex",
]
