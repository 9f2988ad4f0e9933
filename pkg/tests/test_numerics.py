import numpy as np
import pytest
import scipy.sparse as sp

from hdperc import graphs, numerics
from hdperc.errors import InvalidInput

from conftest import path, triangle


def test_laplacian_single_edge_and_triangle():
    L = numerics.laplacian(path(2)).toarray()
    assert L.tolist() == [[1, -1], [-1, 1]]
    T = numerics.laplacian(triangle()).toarray()
    assert np.all(np.diag(T) == 2)
    assert np.all(T[~np.eye(3, dtype=bool)] == -1)


def test_laplacian_of_contracted_star():
    c = graphs.contract_boundary(graphs.build_slice(graphs.GraphFamily.regular_tree(3), 1))
    assert numerics.laplacian(c).toarray().tolist() == [[3, -3], [-3, 3]]


def test_laplacian_rows_sum_to_zero():
    s = graphs.build_slice(graphs.GraphFamily.lattice(2), 6)
    L = numerics.laplacian(s)
    assert np.all(np.asarray(L.sum(axis=1)).ravel() == 0)
    assert (L - L.T).nnz == 0


def test_cg_trivial_and_series():
    Lg, keep = numerics.ground(numerics.laplacian(path(2)), 1)
    rep = numerics.cg_solve(Lg, np.array([1.0]))
    assert rep.converged and rep.solution[0] == pytest.approx(1.0)
    Lg, keep = numerics.ground(numerics.laplacian(path(3)), 0)
    b = np.array([0.0, 1.0])
    rep = numerics.cg_solve(Lg, b)
    assert np.allclose(rep.solution, [1.0, 2.0], atol=1e-12)


def test_cg_matches_dense_solve():
    g = np.random.default_rng(5)
    M = g.normal(size=(50, 50))
    A = (M + M.T) / 2
    A += np.diag(np.abs(A).sum(axis=1) + 1.0)
    b = g.normal(size=50)
    rep = numerics.cg_solve(sp.csr_matrix(A), b, 1e-12)
    assert rep.converged
    assert np.allclose(rep.solution, np.linalg.solve(A, b), atol=1e-8)
    assert rep.residual_norm <= 1e-12 * np.linalg.norm(b)


def test_cg_reports_nonconvergence():
    s = graphs.build_slice(graphs.GraphFamily.lattice(2), 20)
    Lg, keep = numerics.ground(numerics.laplacian(s), 0)
    b = np.zeros(Lg.shape[0])
    b[-1] = 1.0
    rep = numerics.cg_solve(Lg, b, 1e-12, max_iterations=3)
    assert not rep.converged and rep.iterations <= 3


def test_cg_multiple_columns_agree_with_single():
    s = graphs.build_slice(graphs.GraphFamily.lattice(2), 5)
    Lg, _ = numerics.ground(numerics.laplacian(s), 0)
    B = np.random.default_rng(1).normal(size=(Lg.shape[0], 3))
    multi = numerics.cg_solve(Lg, B)
    for j in range(3):
        single = numerics.cg_solve(Lg, B[:, j])
        assert np.allclose(multi.solution[:, j], single.solution, atol=1e-8)


def test_cg_deterministic():
    s = graphs.build_slice(graphs.GraphFamily.lattice(2), 8)
    Lg, _ = numerics.ground(numerics.laplacian(s), 0)
    b = np.arange(Lg.shape[0], dtype=float)
    a1, a2 = numerics.cg_solve(Lg, b), numerics.cg_solve(Lg, b)
    assert np.array_equal(a1.solution, a2.solution)


def test_dense_project_examples():
    assert numerics.dense_project([np.array([1.0, 0.0])], np.array([3.0, 4.0])).tolist() == [3.0, 0.0]
    assert numerics.dense_project([], np.array([3.0, 4.0])).tolist() == [0.0, 0.0]
    tri = triangle()
    e0 = np.eye(3)[0]
    proj = numerics.dense_project(numerics.star_vectors(tri), e0)
    assert proj @ e0 == pytest.approx(2 / 3, abs=1e-12)
    with pytest.raises(InvalidInput):
        numerics.dense_project([np.ones(3)], np.ones(2))


def test_dense_project_idempotent_and_selfadjoint():
    g = np.random.default_rng(3)
    V = [g.normal(size=12) for _ in range(5)]
    u, v = g.normal(size=12), g.normal(size=12)
    Pu = numerics.dense_project(V, u)
    assert np.allclose(numerics.dense_project(V, Pu), Pu, atol=1e-12)
    assert Pu @ v == pytest.approx(u @ numerics.dense_project(V, v), abs=1e-12)


def test_cycles_are_orthogonal_to_stars():
    s = graphs.build_slice(graphs.GraphFamily.lattice(2), 3)
    C = np.array(numerics.cycle_vectors(s))
    S = np.array(numerics.star_vectors(s))
    assert C.shape[0] == s.edge_count - s.vertex_count + 1
    assert np.abs(C @ S.T).max() == 0
