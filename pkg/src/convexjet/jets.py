"""Jet datasets, orthonormal subspaces and the gradient-difference span.

Everything here is small dense linear algebra; ambient dimensions are capped
at :data:`MAX_DIM`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

MAX_DIM = 8


class JetError(ValueError):
    """Malformed or inconsistent jet data."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical thresholds shared by all modules.

    ``tol_eq`` is an absolute floor for the activity test on slacks; each pair
    additionally gets ``rel_eq`` times the magnitude of the terms entering its
    slack, so that rounding noise is never mistaken for strict convexity (or
    the other way round). ``tol_margin`` is the slack allowed on the unit
    margins of augmentation jets.
    """

    tol_pt: float = 1e-12
    tol_eq: float = 1e-14
    rel_eq: float = 64 * np.finfo(float).eps
    tol_grad: float = 1e-7
    tol_rank: float = 1e-9
    tol_pos: float = 1e-12
    tol_margin: float = 1e-9
    warn_threshold: float = 1e-8
    warn_gap: float = 0.5

    def __post_init__(self):
        for name in ("tol_pt", "tol_eq", "rel_eq", "tol_grad", "tol_rank",
                     "tol_pos", "tol_margin", "warn_threshold", "warn_gap"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")


DEFAULT_TOL = Tolerances()


def _vec(v, name="vector") -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.ndim != 1:
        raise JetError(f"{name} must be one-dimensional, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise JetError(f"{name} has non-finite entries")
    return a


@dataclass(frozen=True)
class Jet:
    """A point ``x`` with prescribed value ``f`` and gradient ``g``."""

    x: np.ndarray
    f: float
    g: np.ndarray

    def __post_init__(self):
        x = _vec(self.x, "x")
        g = _vec(self.g, "g")
        if x.shape != g.shape:
            raise JetError(f"point has dim {x.size} but gradient has dim {g.size}")
        if not np.isfinite(self.f):
            raise JetError("value is not finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "f", float(self.f))


class JetDataset:
    """An ordered, immutable collection of jets sharing one dimension.

    Stored column-wise as arrays ``X`` (points), ``F`` (values) and
    ``G`` (gradients). Duplicate points carrying the same value and gradient
    are merged; duplicates that disagree raise :class:`JetError`.
    """

    def __init__(self, X, F, G, tol: Tolerances = DEFAULT_TOL):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        F = np.asarray(F, dtype=float).reshape(-1)
        G = np.atleast_2d(np.asarray(G, dtype=float))
        if X.size == 0 or F.size == 0:
            raise JetError("dataset is empty")
        if X.shape != G.shape or X.shape[0] != F.shape[0]:
            raise JetError(f"inconsistent shapes X{X.shape} F{F.shape} G{G.shape}")
        if X.shape[1] > MAX_DIM:
            raise JetError(f"ambient dimension {X.shape[1]} exceeds {MAX_DIM}")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(F)) and np.all(np.isfinite(G))):
            raise JetError("dataset has non-finite entries")
        keep = _dedupe(X, F, G, tol)
        self.X = X[keep].copy()
        self.F = F[keep].copy()
        self.G = G[keep].copy()
        for a in (self.X, self.F, self.G):
            a.flags.writeable = False

    @classmethod
    def from_jets(cls, jets: Iterable[Jet], tol: Tolerances = DEFAULT_TOL) -> "JetDataset":
        jets = list(jets)
        if not jets:
            raise JetError("dataset is empty")
        dims = {j.x.size for j in jets}
        if len(dims) != 1:
            raise JetError(f"jets have mixed dimensions {sorted(dims)}")
        return cls([j.x for j in jets], [j.f for j in jets], [j.g for j in jets], tol)

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.X.shape[0]

    def __getitem__(self, i) -> Jet:
        return Jet(self.X[i], self.F[i], self.G[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def scale(self) -> float:
        """Magnitude of the data, used to scale tolerances."""
        return float(max(np.abs(self.X).max(), np.abs(self.F).max(), np.abs(self.G).max()))

    def append(self, X, F, G, tol: Tolerances = DEFAULT_TOL) -> "JetDataset":
        X = np.atleast_2d(np.asarray(X, dtype=float)).reshape(-1, self.dim)
        G = np.atleast_2d(np.asarray(G, dtype=float)).reshape(-1, self.dim)
        F = np.asarray(F, dtype=float).reshape(-1)
        return JetDataset(np.vstack([self.X, X]), np.concatenate([self.F, F]),
                          np.vstack([self.G, G]), tol)

    def transformed(self, Q=None, shift=None, a: float = 0.0, u=None) -> "JetDataset":
        """Apply ``x -> Q x + shift`` and add ``a + <u, x>`` to the values.

        Used to check invariance of verdicts under rigid motions and affine
        perturbations. ``u`` is expressed in the new coordinates.
        """
        n = self.dim
        Q = np.eye(n) if Q is None else np.asarray(Q, float)
        shift = np.zeros(n) if shift is None else np.asarray(shift, float)
        u = np.zeros(n) if u is None else np.asarray(u, float)
        X = self.X @ Q.T + shift
        G = self.G @ Q.T + u
        F = self.F + a + X @ u
        return JetDataset(X, F, G)


def _dedupe(X, F, G, tol: Tolerances) -> np.ndarray:
    n = X.shape[0]
    keep = np.ones(n, dtype=bool)
    if n < 2:
        return keep
    scale = max(1.0, float(np.abs(X).max()))
    d2 = ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1)
    close = d2 <= (tol.tol_pt * scale) ** 2
    for i in range(n):
        if not keep[i]:
            continue
        for j in np.nonzero(close[i, i + 1:])[0] + i + 1:
            if not keep[j]:
                continue
            if abs(F[i] - F[j]) > tol.tol_grad * (1 + abs(F[i])) or \
                    np.linalg.norm(G[i] - G[j]) > tol.tol_grad * (1 + np.linalg.norm(G[i])):
                raise JetError(f"jets {i} and {j} share a point but disagree")
            keep[j] = False
    return keep


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of R^n stored as an orthonormal basis (rows of ``basis``)."""

    ambient_dim: int
    basis: np.ndarray = field(default=None)

    def __post_init__(self):
        B = np.zeros((0, self.ambient_dim)) if self.basis is None else \
            np.asarray(self.basis, dtype=float).reshape(-1, self.ambient_dim)
        if B.shape[0]:
            gram = B @ B.T
            if np.abs(gram - np.eye(B.shape[0])).max() > 1e-12:
                raise JetError("basis is not orthonormal")
        B = B.copy()
        B.flags.writeable = False
        object.__setattr__(self, "basis", B)

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls(n, np.eye(n))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, None)

    @classmethod
    def spanned_by(cls, vectors, n: int | None = None, rtol: float = 1e-9) -> "Subspace":
        """Orthonormal basis of the span of the rows of ``vectors``."""
        V = np.asarray(vectors, dtype=float)
        if n is None:
            n = V.shape[-1]
        V = V.reshape(-1, n)
        return cls(n, _range_basis(V, rtol))

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def coords(self, v) -> np.ndarray:
        """Coordinates of ``P v`` in the stored basis (works row-wise)."""
        return np.asarray(v, dtype=float) @ self.basis.T

    def embed(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) @ self.basis

    def contains(self, v, atol: float = 1e-9) -> bool:
        v = np.atleast_2d(np.asarray(v, dtype=float))
        r = v - self.embed(self.coords(v))
        return bool(np.all(np.linalg.norm(r, axis=1) <= atol * np.maximum(1.0, np.linalg.norm(v, axis=1))))

    def includes(self, other: "Subspace", atol: float = 1e-9) -> bool:
        return other.dim == 0 or self.contains(other.basis, atol)

    def equals(self, other: "Subspace", atol: float = 1e-9) -> bool:
        return self.dim == other.dim and self.includes(other, atol)


def _range_basis(V: np.ndarray, rtol: float) -> np.ndarray:
    if V.shape[0] == 0:
        return np.zeros((0, V.shape[1]))
    _, s, Vt = np.linalg.svd(V, full_matrices=False)
    ref = s[0] if s.size and s[0] > 0 else 1.0
    rank = int(np.sum(s >= rtol * ref)) if s.size and s[0] > 0 else 0
    B = Vt[:rank]
    # canonical sign: first significant entry positive
    for k in range(rank):
        j = np.argmax(np.abs(B[k]) > 1e-12)
        if B[k, j] < 0:
            B[k] = -B[k]
    return B


def span_of_differences(ds: JetDataset, tol: Tolerances = DEFAULT_TOL) -> Subspace:
    """Span of all gradient differences ``g_i - g_j`` of a dataset."""
    if len(ds) == 0:
        raise JetError("dataset is empty")
    D = ds.G - ds.G[0]
    return Subspace(ds.dim, _range_basis(D, tol.tol_rank))


def project(S: Subspace, v) -> np.ndarray:
    """Orthogonal projection of ``v`` (or of each row of ``v``) onto ``S``."""
    v = np.asarray(v, dtype=float)
    if v.shape[-1] != S.ambient_dim:
        raise JetError(f"vector of dim {v.shape[-1]} in subspace of R^{S.ambient_dim}")
    return S.embed(S.coords(v))


def orthocomplement_in(S: Subspace, T: Subspace, atol: float = 1e-9) -> Subspace:
    """Orthonormal basis of ``T`` intersected with the orthogonal complement of ``S``."""
    if S.ambient_dim != T.ambient_dim:
        raise JetError("subspaces live in different ambient spaces")
    if not T.includes(S, atol):
        raise JetError("S is not contained in T")
    n = T.ambient_dim
    if T.dim == S.dim:
        return Subspace.zero(n)
    W = T.basis - (T.basis @ S.basis.T) @ S.basis if S.dim else T.basis
    B = _range_basis(W, 1e-9)[: T.dim - S.dim]
    if S.dim:
        # one more sweep keeps the result orthogonal to S at machine precision
        B = B - (B @ S.basis.T) @ S.basis
        B = _range_basis(B, 1e-9)
    return Subspace(n, B)


def dataset_from_arrays(X, F, G, tol: Tolerances = DEFAULT_TOL) -> JetDataset:
    return JetDataset(X, F, G, tol)


def as_subspace(basis: Sequence | None, n: int) -> Subspace:
    """Build a subspace from any spanning list of vectors (``None`` means R^n)."""
    if basis is None:
        return Subspace.full(n)
    return Subspace.spanned_by(np.asarray(basis, dtype=float).reshape(-1, n), n)
