import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexjet.jets import (Jet, JetDataset, JetError, Subspace, Tolerances, as_subspace,
                            orthocomplement_in, project, span_of_differences)
from oracles import numeric_rank_gram


def test_jet_rejects_bad_shapes():
    with pytest.raises(JetError):
        Jet([0.0, 1.0], 1.0, [1.0])
    with pytest.raises(JetError):
        Jet([np.nan], 1.0, [1.0])


def test_tolerances_positive():
    with pytest.raises(ValueError):
        Tolerances(tol_eq=0.0)


def test_duplicates_merged_and_conflicts_rejected():
    ds = JetDataset([[0.0], [0.0], [1.0]], [1.0, 1.0, 2.0], [[1.0], [1.0], [1.0]])
    assert len(ds) == 2
    with pytest.raises(JetError):
        JetDataset([[0.0], [0.0]], [1.0, 2.0], [[1.0], [1.0]])


def test_span_examples():
    ds = JetDataset([[0.0, 0], [1, 0]], [0, 0], [[1.0, 0], [-1, 0]])
    Y = span_of_differences(ds)
    assert Y.dim == 1 and Y.equals(Subspace(2, [[1.0, 0]]))
    assert span_of_differences(JetDataset([[1.0, 2.0]], [0.0], [[3.0, 4.0]])).dim == 0
    P = np.random.default_rng(0).normal(size=(10, 3))
    ds = JetDataset(P, 0.5 * (P ** 2).sum(1), P)
    assert span_of_differences(ds).dim == 3 == numeric_rank_gram(P[1:] - P[0])


def test_project_examples():
    S = Subspace(2, [[1.0, 0]])
    assert np.allclose(project(S, [3.0, 4.0]), [3.0, 0.0])
    assert np.allclose(project(Subspace.zero(3), [1.0, 2, 3]), 0)
    with pytest.raises(JetError):
        project(S, [1.0, 2, 3])


def test_orthocomplement_examples():
    e1 = Subspace(2, [[1.0, 0]])
    W = orthocomplement_in(e1, Subspace.full(2))
    assert W.equals(Subspace(2, [[0.0, 1]]))
    assert orthocomplement_in(e1, e1).dim == 0
    a = np.array([1.0, 1, 0]) / np.sqrt(2)
    T = Subspace(3, [a, [0, 0, 1.0]])
    W = orthocomplement_in(Subspace(3, [a]), T)
    assert W.equals(Subspace(3, [[0, 0, 1.0]]), 1e-12)
    with pytest.raises(JetError):
        orthocomplement_in(Subspace(2, [[0.0, 1]]), e1)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(0, 6), st.integers(0, 2 ** 31 - 1))
def test_projection_properties(n, k, seed):
    k = min(k, n)
    rng = np.random.default_rng(seed)
    S = as_subspace(rng.normal(size=(k, n)), n) if k else Subspace.zero(n)
    v = rng.normal(size=(20, n))
    p = project(S, v)
    assert np.allclose(project(S, p), p, atol=1e-12)
    assert np.all(np.linalg.norm(p, axis=1) <= np.linalg.norm(v, axis=1) + 1e-12)
    if k:
        assert np.abs((v - p) @ S.basis.T).max() < 1e-12
    T = Subspace.full(n)
    W = orthocomplement_in(S, T)
    assert W.dim == n - S.dim
    if S.dim and W.dim:
        assert np.abs(W.basis @ S.basis.T).max() < 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 5), st.integers(2, 15), st.integers(0, 2 ** 31 - 1))
def test_differences_lie_in_span(n, m, seed):
    rng = np.random.default_rng(seed)
    r = rng.integers(0, n + 1)
    G = rng.normal(size=(m, r)) @ rng.normal(size=(r, n)) + rng.normal(size=n)
    ds = JetDataset(rng.normal(size=(m, n)), rng.normal(size=m), G)
    Y = span_of_differences(ds)
    D = ds.G[:, None] - ds.G[None]
    D = D.reshape(-1, n)
    assert np.abs(D - project(Y, D)).max() <= 1e-9 * (1 + np.abs(D).max())
    assert Y.dim <= r


def test_transformed_keeps_slacks():
    rng = np.random.default_rng(3)
    P = rng.normal(size=(8, 2))
    ds = JetDataset(P, 0.5 * (P ** 2).sum(1), P)
    Q, _ = np.linalg.qr(rng.normal(size=(2, 2)))
    t = ds.transformed(Q, [1.0, -2.0], 0.3, [0.5, 0.1])
    from convexjet.validator import slack_matrix

    assert np.allclose(slack_matrix(ds), slack_matrix(t), atol=1e-12)
