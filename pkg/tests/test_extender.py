import numpy as np
import pytest

from convexjet.datasets import corner_function, quadratic
from convexjet.envelope import GridSpec
from convexjet.extender import (ExtensionModel, ExtensionRejected, JetMismatch, ProjectionCollision,
                                build_extension, build_majorant, check_jets, distance_surrogate,
                                majorant_fn, project_data, shepard_jet_interpolant)
from convexjet.jets import JetDataset, Subspace
from convexjet.minimal import build_minimal, decompose


def _proj(ds, X=None):
    dec = decompose(build_minimal(ds))
    return project_data(ds, dec.v, X or Subspace.full(ds.dim))


def test_project_full_space():
    ds = quadratic(2, 10, seed=3)
    P = _proj(ds)
    assert np.allclose(P.A @ P.basis, ds.X) and np.allclose(P.h, ds.F)


def test_consistent_collision_merges():
    ds = JetDataset([[1.0, 0], [1.0, 3]], [1.0, 1.0], [[2.0, 0], [2.0, 0]])
    P = project_data(ds, np.zeros(2), Subspace(2, [[1.0, 0]]))
    assert len(P.A) == 1 and P.source == [[0, 1]]
    bad = JetDataset([[1.0, 0], [1.0, 3]], [1.0, 2.0], [[2.0, 0], [2.0, 0]])
    with pytest.raises(ProjectionCollision):
        project_data(bad, np.zeros(2), Subspace(2, [[1.0, 0]]))


def test_projection_drops_zero_axis():
    ds = corner_function(20, dim=3, k=2, seed=1)
    X = Subspace(3, [[1.0, 0, 0], [0, 1, 0]])
    P = project_data(ds, np.zeros(3), X)
    assert P.dim == 2 and np.allclose(P.dh, ds.G[:, :2])


def test_shepard_single_and_affine():
    one = project_data(JetDataset([[0.5]], [1.0], [[2.0]]), np.zeros(1), Subspace.full(1))
    q = np.linspace(-3, 3, 13)[:, None]
    v, g = shepard_jet_interpolant(one, q)
    assert np.allclose(v, 1 + 2 * (q[:, 0] - 0.5)) and np.allclose(g, 2)
    rng = np.random.default_rng(0)
    X = rng.normal(size=(6, 2))
    a = np.array([0.3, -1.2])
    ds = JetDataset(X, X @ a + 0.7, np.tile(a, (6, 1)))
    P = project_data(ds, np.zeros(2), Subspace.full(2))
    Q = rng.normal(size=(50, 2))
    v, g = shepard_jet_interpolant(P, Q)
    assert np.allclose(v, Q @ a + 0.7, atol=1e-12) and np.allclose(g, a, atol=1e-10)


def test_shepard_jets_in_1d():
    x = np.linspace(-1, 1, 5)[:, None]
    P = _proj(JetDataset(x, 0.5 * x[:, 0] ** 2, x))
    v, g = shepard_jet_interpolant(P, P.A)
    assert np.abs(v - P.h).max() <= 1e-12
    s = 1e-5
    cd = (shepard_jet_interpolant(P, P.A + s)[0] - shepard_jet_interpolant(P, P.A - s)[0]) / (2 * s)
    assert np.abs(cd - P.dh[:, 0]).max() <= 1e-6
    # analytic gradient agrees with differences away from the data
    y = np.array([[0.13], [0.71]])
    cd = (shepard_jet_interpolant(P, y + s)[0] - shepard_jet_interpolant(P, y - s)[0]) / (2 * s)
    assert np.allclose(cd, shepard_jet_interpolant(P, y)[1][:, 0], atol=1e-6)


def test_distance_surrogate_bounds():
    A = np.array([[0.0, 0], [1, 0]])
    Q = np.random.default_rng(1).normal(size=(100, 2))
    d = distance_surrogate(A, Q)
    dmin = ((Q[:, None] - A[None]) ** 2).sum(-1).min(1)
    assert np.all(d <= dmin + 1e-15) and np.all(distance_surrogate(A, A) == 0)


@pytest.mark.parametrize("mode", ["max", "literal"])
def test_majorant_properties(mode):
    ds = JetDataset([[-1.0], [1.0]], [1.0, 1.0], [[-1.0], [1.0]])
    P = _proj(ds)
    spec = GridSpec.covering(P.A, 41)
    g = build_majorant(P, spec, mode)
    y = spec.nodes()
    assert np.all(g.values.ravel() >= P.minimal()(y) - 1e-14)
    assert np.allclose(majorant_fn(P, mode)(P.A), P.h)
    assert np.all(g.values.ravel() >= np.abs(y[:, 0]) - 1e-14)


def test_majorant_single_affine():
    P = _proj(JetDataset([[0.0]], [1.0], [[0.5]]))
    spec = GridSpec((-2,), (2,), (21,))
    g = majorant_fn(P)
    y = spec.nodes()
    # the drift v* is removed, leaving a constant plus the distance term
    assert np.allclose(P.h, 1.0) and np.allclose(P.dh, 0.0)
    assert np.allclose(g(y) - 2 * distance_surrogate(P.A, y), 1.0)


def test_tampered_interpolant_aborts():
    ds = quadratic(1, 5, seed=0)
    P = _proj(ds)
    spec = GridSpec.covering(P.A, 41)

    def bad(Q):
        v, _ = shepard_jet_interpolant(P, Q)
        return v + 0.5 * (Q[:, 0] - P.A[0, 0]) * np.exp(-((Q[:, 0] - P.A[0, 0]) ** 2) / 1e-3)

    g = majorant_fn(P, interpolant=bad)
    assert np.all(g(spec.nodes()) >= P.minimal()(spec.nodes()) - 1e-12)
    with pytest.raises(JetMismatch):
        check_jets(P, g)
    with pytest.raises(JetMismatch):
        build_majorant(P, spec, interpolant=bad)


def test_single_jet_model_is_affine():
    ds = JetDataset([[1.0, -1.0]], [2.0], [[0.5, 0.25]])
    res = build_extension(ds)
    x = np.random.default_rng(0).normal(size=(20, 2))
    v, g = res.model.eval(x)
    assert np.allclose(v, 2 + (x - [1, -1]) @ [0.5, 0.25]) and np.allclose(g, [0.5, 0.25])
    assert res.report["residuals"]["value"] == 0.0


def test_abs_model_at_kink():
    x = np.array([[-1.0], [-0.5], [0.5], [1.0]])
    ds = JetDataset(x, np.abs(x[:, 0]), np.sign(x))
    res = build_extension(ds, grid=201)
    v, g = res.model.eval(np.array([0.0]))
    # the majorant lifts the kink: value near 0, slope within [-1, 1]
    assert -1e-12 <= v <= 0.5 and -1 - 1e-12 <= g[0] <= 1 + 1e-12


def test_quadratic_build_thresholds():
    ds = quadratic(2, 20, seed=4)
    res = build_extension(ds, grid=129, dual_radius=4.0)
    h = res.report["h_grid"]
    assert res.report["residuals"]["value"] <= 5 * h
    assert res.report["residuals"]["gradient"] <= 0.1
    x = np.random.default_rng(0).uniform(-1.5, 1.5, (2000, 2))
    m = build_minimal(ds)
    assert np.all(res.model(x) >= m(x) - 1e-9)
    _, g = res.model.eval(x)
    assert np.all(np.linalg.norm(g - res.model.v_star, axis=1) <= 4 * np.sqrt(2) + np.linalg.norm(res.model.v_star) + 1e-9)


def test_rejected_dataset_raises():
    with pytest.raises(ExtensionRejected):
        build_extension(JetDataset([[0.0], [1.0]], [0.0, 0.0], [[0.0], [1.0]]))


def test_model_roundtrip(tmp_path):
    res = build_extension(quadratic(2, 8, seed=5), grid=33)
    res.model.save(tmp_path / "m.json")
    back = ExtensionModel.load(tmp_path / "m.json")
    x = np.random.default_rng(1).normal(size=(100, 2))
    assert np.array_equal(back(x), res.model(x))
    v1, g1 = back.eval(x)
    v2, g2 = res.model.eval(x)
    assert np.array_equal(g1, g2)


def test_lower_dimensional_X():
    ds = corner_function(25, dim=3, k=2, seed=2)
    res = build_extension(ds, grid=65)
    assert res.report["dim_X"] == 2
    x = ds.X + np.array([0, 0, 5.0])
    # F is constant along the missing direction up to the drift v*
    assert np.allclose(res.model(x) - res.model(ds.X), 5 * res.model.v_star[2], atol=1e-9)
