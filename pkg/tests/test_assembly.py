import numpy as np
import pytest

from dense_oracle import QuadTables, exact_matrices
from oracle_compare import matrix_errors, small_meshes
from ieqfem.assembly import AssembledOperators, assemble_load, assemble_mass, assemble_stiffness, set_threads
from ieqfem.fem import FeSpace
from ieqfem.mesh import build_rect_mesh, single_triangle_mesh


@pytest.fixture
def unit_tri():
    return FeSpace(single_triangle_mesh((0, 0), (1, 0), (0, 1)), 1)


def test_unit_triangle_mass(unit_tri):
    expect = np.array([[2, 1, 1], [1, 2, 1], [1, 1, 2]]) / 24
    np.testing.assert_allclose(assemble_mass(unit_tri).toarray(), expect, atol=1e-15)


def test_unit_triangle_stiffness(unit_tri):
    expect = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]])
    np.testing.assert_allclose(assemble_stiffness(unit_tri).toarray(), expect, atol=1e-15)


@pytest.mark.parametrize("degree", [1, 2])
def test_mass_and_stiffness_sums(degree):
    s = FeSpace(build_rect_mesh((-1, 2, 0, 1.5), 5, 4), degree)
    G = assemble_mass(s)
    D = assemble_stiffness(s)
    assert G.sum() == pytest.approx(4.5, rel=1e-13)
    np.testing.assert_allclose(D @ np.ones(s.n_dofs), 0.0, atol=1e-13)
    assert assemble_load(s, np.ones(s.qshape)).sum() == pytest.approx(4.5, rel=1e-13)


@pytest.mark.parametrize("degree", [1, 2])
def test_constant_weights_are_linear(degree):
    s = FeSpace(build_rect_mesh((0, 1, 0, 1), 4, 4), degree)
    G, D = assemble_mass(s), assemble_stiffness(s)
    np.testing.assert_allclose(assemble_mass(s, np.full(s.qshape, 3.0)).toarray(), 3 * G.toarray(), atol=1e-13)
    np.testing.assert_allclose(assemble_stiffness(s, 0.05**2).toarray(), 0.0025 * D.toarray(), atol=1e-13)


def test_load_matches_dense_loop():
    m = build_rect_mesh((-np.pi, 3 * np.pi, -np.pi, 3 * np.pi), 8, 8)
    s = FeSpace(m, 1)
    f = lambda x, y: np.sin(x / 2) * np.sin(y / 2)
    tab = QuadTables(m, 1, s.quad.points, s.quad.weights)
    np.testing.assert_allclose(assemble_load(s, s.sample(f)), tab.load(f(tab.xy[:, 0], tab.xy[:, 1])), atol=1e-12)


@pytest.mark.parametrize("degree", [1, 2])
def test_against_exact_integration(degree):
    rng = np.random.default_rng(11)
    for mesh in small_meshes(rng):
        errs = matrix_errors(mesh, degree, rng)
        assert max(errs.values()) <= 1e-12, errs


def test_exact_oracle_self_check():
    M, S = exact_matrices(single_triangle_mesh((0, 0), (1, 0), (0, 1)), 2)
    assert M.sum() == pytest.approx(0.5)
    np.testing.assert_allclose(S.sum(axis=1), 0.0, atol=1e-14)


def test_reweight_shares_pattern():
    s = FeSpace(build_rect_mesh((0, 1, 0, 1), 3, 3), 2)
    ops = AssembledOperators(s)
    h = np.random.default_rng(0).normal(size=s.qshape)
    ops.reweight(h_q=h, mobility_const=2.0)
    np.testing.assert_allclose(ops.G_H2.toarray(), assemble_mass(s, h * h).toarray(), atol=1e-14)
    np.testing.assert_allclose(ops.D_M.toarray(), 2 * ops.D.toarray())
    np.testing.assert_array_equal(ops.G_H.indptr, ops.G.indptr)


def test_threaded_assembly_matches():
    s = FeSpace(build_rect_mesh((0, 1, 0, 1), 9, 7), 2)
    w = np.random.default_rng(2).uniform(1, 2, s.qshape)
    ref = assemble_stiffness(s, w).toarray(), assemble_mass(s, w).toarray()
    try:
        set_threads(4)
        got = assemble_stiffness(s, w).toarray(), assemble_mass(s, w).toarray()
    finally:
        set_threads(1)
    np.testing.assert_allclose(got[0], ref[0], rtol=0, atol=1e-14)
    np.testing.assert_allclose(got[1], ref[1], rtol=0, atol=1e-14)


def test_threads_env(monkeypatch):
    monkeypatch.setenv("THREADS", "3")
    assert set_threads() == 3
    monkeypatch.setenv("THREADS", "0")
    with pytest.raises(ValueError):
        set_threads()
    set_threads(1)
