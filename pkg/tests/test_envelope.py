import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from convexjet.envelope import (GridError, GridFunction, GridSpec, biconjugate, conjugate,
                                is_convex_along_lines, lft_1d, lower_hull_1d)
from oracles import caratheodory_1d, lower_hull_values


def test_gridspec_validation():
    with pytest.raises(GridError):
        GridSpec((0,), (1,), (5,))
    with pytest.raises(GridError):
        GridSpec((1,), (0,), (20,))
    spec = GridSpec.covering(np.array([[0.0, 0], [1, 2]]), 33)
    assert spec.contains([[0.0, 0], [1, 2]], margin=4 * spec.h_grid)


def test_lower_hull_1d_collinear():
    x = np.arange(5.0)
    assert list(lower_hull_1d(x, 2 * x)) == [0, 4]
    assert list(lower_hull_1d(x, (x - 2) ** 2)) == [0, 1, 2, 3, 4]


def test_lft_matches_brute_force():
    rng = np.random.default_rng(0)
    x = np.sort(rng.uniform(-2, 2, 60))
    y = rng.normal(size=60)
    s = np.linspace(-5, 5, 41)
    assert np.allclose(lft_1d(x, y, s), (s[:, None] * x - y).max(axis=1), atol=1e-13)


def test_conjugate_separable_exact():
    rng = np.random.default_rng(1)
    spec = GridSpec((-1, -2), (1, 0.5), (13, 17))
    g = GridFunction(spec, rng.normal(size=spec.shape), rng.uniform(-1, 0.5, (3, 2)), rng.normal(size=3))
    duals = [np.linspace(-3, 3, 7), np.linspace(-2, 4, 5)]
    out = conjugate(g, duals)
    P, v = g.flat()
    S = np.stack(np.meshgrid(*duals, indexing="ij"), -1).reshape(-1, 2)
    assert np.allclose(out.ravel(), (S @ P.T - v).max(axis=1), atol=1e-12)


def test_convex_input_is_fixed_point():
    spec = GridSpec((-1, -1), (1, 1), (33, 33))
    g = GridFunction.sample(spec, lambda X: 0.5 * (X ** 2).sum(1))
    H, _ = biconjugate(g)
    assert np.abs(H.values - g.values).max() <= 1e-9


def test_double_well():
    spec = GridSpec((-2,), (2,), (201,))
    g = GridFunction.sample(spec, lambda X: (X[:, 0] ** 2 - 1) ** 2)
    H, _ = biconjugate(g)
    x = spec.axes[0]
    expect = np.where(np.abs(x) <= 1, 0.0, (x ** 2 - 1) ** 2)
    assert np.abs(H.values - expect).max() <= 1e-9


def test_random_2d_matches_oracle():
    rng = np.random.default_rng(2)
    spec = GridSpec((-1, -1), (1, 1), (33, 33))
    g = GridFunction(spec, rng.normal(size=spec.shape))
    H, _ = biconjugate(g)
    P, v = g.flat()
    assert np.abs(H.values.ravel() - lower_hull_values(P, v)).max() <= 1e-9


def test_extra_points_enter_hull():
    spec = GridSpec((-1,), (1,), (21,))
    g = GridFunction(spec, np.ones(21), [[0.013]], [-5.0])
    H, _ = biconjugate(g)
    assert H.extra_values[0] == -5.0
    P, v = g.flat()
    assert np.allclose(np.r_[H.values, H.extra_values], lower_hull_values(P, v), atol=1e-12)


def test_truncation_bounds_slopes():
    spec = GridSpec((-2, -2), (2, 2), (25, 25))
    g = GridFunction.sample(spec, lambda X: (X ** 2).sum(1) ** 2)
    res = biconjugate(g, dual_radius=1.5)
    assert res.truncated
    assert np.abs(res.slopes).max() <= 1.5 + 1e-12
    full, _ = biconjugate(g)
    assert np.all(res.H.values <= full.values + 1e-12)
    # truncation at L is the supremum of planes with slopes in the box: near the
    # origin (slopes < 1.5) nothing changes
    c = spec.nodes()
    inner = (np.abs(c) < 0.5).all(axis=1)
    assert np.allclose(res.H.values.ravel()[inner], full.values.ravel()[inner], atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 2), st.integers(10, 24), st.integers(0, 2 ** 31 - 1))
def test_envelope_properties(d, n, seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec((-1,) * d, (1,) * d, (n,) * d)
    g = GridFunction(spec, rng.normal(size=spec.shape) + rng.uniform(0, 3) * (spec.nodes() ** 2).sum(1).reshape(spec.shape))
    H, (S, t) = biconjugate(g)
    assert np.all(H.values <= g.values + 1e-12)
    assert is_convex_along_lines(H)
    H2, _ = biconjugate(H)
    assert np.abs(H2.values - H.values).max() <= 1e-12 * max(1, np.abs(H.values).max())
    if d == 1:
        assert np.allclose(H.values, caratheodory_1d(spec.axes[0], g.values), atol=1e-12)


def test_csv_dump(tmp_path):
    spec = GridSpec((0,), (1,), (11,))
    g = GridFunction.sample(spec, lambda X: X[:, 0])
    g.to_csv(tmp_path / "g.csv")
    A = np.loadtxt(tmp_path / "g.csv", delimiter=",", skiprows=1)
    assert A.shape == (11, 2)
