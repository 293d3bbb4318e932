"""Closed-form jet and normal datasets used in tests, demos and the CLI."""
from __future__ import annotations

import numpy as np

from .jets import JetDataset


def corner_sqrt(P):
    """``sqrt(x^2 + e^{-2y})`` on the first two coordinates, with its gradient."""
    P = np.atleast_2d(np.asarray(P, float))
    x, y = P[:, 0], P[:, 1]
    # stable for large y: e^{-2y} underflows gracefully
    f = np.hypot(x, np.exp(-y))
    G = np.zeros_like(P)
    G[:, 0] = x / f
    G[:, 1] = -np.exp(-2 * y) / f
    return f, G


def example_1_2(k_max: int = 30) -> JetDataset:
    """Jets of ``sqrt(x^2 + e^{-2y})`` at ``(0, k)`` and ``(1/k, k)``, ``k = 1..k_max``.

    The two points of each pair come in that order, so pair ``k`` sits at
    rows ``2k - 2`` and ``2k - 1``.
    """
    k = np.arange(1, k_max + 1, dtype=float)
    P = np.empty((2 * k_max, 2))
    P[0::2] = np.c_[np.zeros_like(k), k]
    P[1::2] = np.c_[1 / k, k]
    f, G = corner_sqrt(P)
    return JetDataset(P, f, G)


def _log_abscissae(n_max: int) -> np.ndarray:
    a = np.r_[np.arange(1, n_max + 1, dtype=float), 1 / np.arange(2, n_max + 1, dtype=float)]
    return np.r_[a, -a]


def e1_truncated(n_max: int = 10) -> JetDataset:
    """``|x|`` on ``y = log|x|`` for ``|x| in {1..n} u {1/2..1/n}``, gradients ``(sign x, 0)``."""
    x = _log_abscissae(n_max)
    P = np.c_[x, np.log(np.abs(x))]
    return JetDataset(P, np.abs(x), np.c_[np.sign(x), np.zeros_like(x)])


def e2_truncated(n_max: int = 10) -> JetDataset:
    """Same points as :func:`e1_truncated`, jets of ``sqrt(x^2 + e^{-2y})``."""
    x = _log_abscissae(n_max)
    P = np.c_[x, np.log(np.abs(x))]
    f, G = corner_sqrt(P)
    return JetDataset(P, f, G)


def e3_truncated(n_max: int = 10) -> JetDataset:
    """:func:`e2_truncated` placed in the plane ``z = 0`` of R^3."""
    ds = e2_truncated(n_max)
    z = np.zeros((len(ds), 1))
    return JetDataset(np.c_[ds.X, z], ds.F, np.c_[ds.G, z])


def e4_truncated(n_max: int = 10, y_max: int = 5) -> JetDataset:
    """:func:`e1_truncated` plus ``(+-a, y)`` for ``a in {1..n}``, ``|y| <= y_max`` integer."""
    base = e1_truncated(n_max)
    a = np.arange(1, n_max + 1, dtype=float)
    aa, yy = np.meshgrid(np.r_[a, -a], np.arange(-y_max, y_max + 1, dtype=float), indexing="ij")
    P = np.c_[aa.ravel(), yy.ravel()]
    G = np.c_[np.sign(P[:, 0]), np.zeros(len(P))]
    return base.append(P, np.abs(P[:, 0]), G)


def corner_function(count: int = 30, dim: int = 3, k: int = 2, seed: int = 0,
                    lo=(-2.0, -1.0), hi=(2.0, 2.0)) -> JetDataset:
    """Jets of ``sqrt(x_1^2 + sum_{j=2..k} e^{-2 x_j})`` at random points with trailing zeros.

    The first ``k`` coordinates are uniform in the box ``[lo, hi]`` (first
    coordinate on ``[lo[0], hi[0]]``, the others on ``[lo[1], hi[1]]``).
    """
    rng = np.random.default_rng(seed)
    P = np.zeros((count, dim))
    P[:, 0] = rng.uniform(lo[0], hi[0], count)
    P[:, 1:k] = rng.uniform(lo[1], hi[1], (count, k - 1))
    e = np.exp(-2 * P[:, 1:k])
    f = np.sqrt(P[:, 0] ** 2 + e.sum(axis=1))
    G = np.zeros_like(P)
    G[:, 0] = P[:, 0] / f
    G[:, 1:k] = -e / f[:, None]
    return JetDataset(P, f, G)


def quadratic(dim: int = 2, count: int = 20, seed: int = 0, radius: float = 1.0) -> JetDataset:
    """Jets of ``|x|^2 / 2`` at uniform points of ``[-radius, radius]^dim``."""
    P = np.random.default_rng(seed).uniform(-radius, radius, (count, dim))
    return JetDataset(P, 0.5 * (P ** 2).sum(axis=1), P.copy())


def logsumexp(dim: int = 2, count: int = 20, seed: int = 0, radius: float = 1.0) -> JetDataset:
    """Jets of ``log sum_j e^{x_j}``."""
    P = np.random.default_rng(seed).uniform(-radius, radius, (count, dim))
    mx = P.max(axis=1, keepdims=True)
    E = np.exp(P - mx)
    s = E.sum(axis=1, keepdims=True)
    return JetDataset(P, (mx + np.log(s))[:, 0], E / s)


def corner_box(count: int = 20, seed: int = 0, lo=(-1.0, -1.0), hi=(1.0, 1.0)) -> JetDataset:
    """Jets of ``sqrt(x^2 + e^{-2y})`` at uniform points of a box."""
    P = np.random.default_rng(seed).uniform(lo, hi, (count, 2))
    f, G = corner_sqrt(P)
    return JetDataset(P, f, G)


def bounded_gradient(dim: int = 2, count: int = 20, K: float = 1.0, seed: int = 0) -> JetDataset:
    """Jets of ``K sqrt(1 + |A x|^2)`` scaled so that ``max |G| = K`` on the sample."""
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(dim, dim)) + 2 * np.eye(dim)
    P = rng.uniform(-1, 1, (count, dim))
    Z = P @ A.T
    r = np.sqrt(1 + (Z ** 2).sum(axis=1))
    G = (Z / r[:, None]) @ A
    scale = K / np.linalg.norm(G, axis=1).max()
    return JetDataset(P, scale * r, scale * G)


def sphere_normals(n: int = 32, dim: int = 2, radius: float = 1.0):
    """Points on a circle (equally spaced) or sphere (Fibonacci lattice) with ``N(x) = x/|x|``."""
    if dim == 2:
        t = 2 * np.pi * np.arange(n) / n
        U = np.c_[np.cos(t), np.sin(t)]
    elif dim == 3:
        i = np.arange(n) + 0.5
        phi = np.arccos(1 - 2 * i / n)
        th = np.pi * (1 + 5 ** 0.5) * i
        U = np.c_[np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)]
    else:
        raise ValueError("dim must be 2 or 3")
    return radius * U, U


def square_midpoints(half: float = 1.0):
    """Edge midpoints of the square ``[-half, half]^2`` with edge normals."""
    N = np.array([[1.0, 0], [0, 1], [-1, 0], [0, -1]])
    return half * N, N.copy()


def octahedron():
    """Vertices ``+-e_k`` of the octahedron, each with the normal of an adjacent face."""
    X = np.vstack([np.eye(3), -np.eye(3)])
    N = np.ones((6, 3))
    for i, x in enumerate(X):
        k = int(np.argmax(np.abs(x)))
        N[i, k] = np.sign(x[k])
    return X, N / np.sqrt(3)


GENERATORS = {
    "example-1.2": example_1_2,
    "example-1.6-E1": e1_truncated,
    "example-1.6-E2": e2_truncated,
    "example-1.6-E3": e3_truncated,
    "example-1.6-E4": e4_truncated,
    "corner-function": corner_function,
    "quadratic": quadratic,
    "logsumexp": logsumexp,
    "corner-box": corner_box,
    "bounded-gradient": bounded_gradient,
}

NORMAL_GENERATORS = {
    "sphere-normals": sphere_normals,
    "square-midpoints": square_midpoints,
    "octahedron": octahedron,
}
