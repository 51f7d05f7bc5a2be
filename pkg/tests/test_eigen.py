import numpy as np
import pytest
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from ltsa import dataset as ds
from ltsa.align import build_operator
from ltsa.eigen import SolverReport, fix_signs, smallest_eigenpairs
from ltsa.errors import ConvergenceError
from ltsa.neighbors import knn
from ltsa.tangent import all_frames


def helix_operator(N=200, k=8, eta=0.0):
    X, _ = ds.gen_curve("helix", N, eta, seed=1)
    nb = knn(X, k)
    return build_operator(all_frames(X, nb, 1), nb)


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_diagonal_operator(method):
    lam, U, rep = smallest_eigenpairs(np.diag([0.0, 1.0, 2.0, 3.0]), 2, method=method)
    np.testing.assert_allclose(lam, [0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(np.abs(U), np.eye(4)[:, :2], atol=1e-10)
    assert rep.method == method


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_sparse_and_linear_operator_inputs(method):
    A = scipy.sparse.diags(np.arange(1.0, 41.0)).tocsr()
    lam, _, _ = smallest_eigenpairs(A, 3, method=method)
    np.testing.assert_allclose(lam, [1, 2, 3], atol=1e-9)
    L = scipy.sparse.linalg.aslinearoperator(A)
    lam2, _, _ = smallest_eigenpairs(L, 3, method=method)
    np.testing.assert_allclose(lam2, [1, 2, 3], atol=1e-9)


def test_lanczos_matches_dense_on_helix():
    op = helix_operator()
    l1, U1, _ = smallest_eigenpairs(op, 2, method="dense")
    l2, U2, rep = smallest_eigenpairs(op, 2, method="lanczos")
    np.testing.assert_allclose(l1, l2, atol=1e-8)
    assert np.max(scipy.linalg.subspace_angles(U1[:, 1:], U2[:, 1:])) <= 1e-6
    assert rep.iterations > 0 and rep.matvecs >= rep.iterations
    assert rep.shift == pytest.approx(1.01 * op.norm_estimate())


@pytest.mark.parametrize("method", ["dense", "lanczos"])
def test_null_vector_first(method):
    op = helix_operator(eta=0.05)
    lam, U, rep = smallest_eigenpairs(op, 3, tol=1e-10, method=method)
    assert -1e-10 <= lam[0] <= 1e-10
    e = np.ones(op.N) / np.sqrt(op.N)
    assert abs(U[:, 0] @ e) == pytest.approx(1.0, abs=1e-12)
    np.testing.assert_allclose(U.T @ U, np.eye(3), atol=1e-10)
    assert np.all(rep.residuals <= 1e-10 * op.norm_estimate())
    assert np.all(np.diff(lam[1:]) >= 0)


def test_eigenvector_signs():
    op = helix_operator()
    _, U, _ = smallest_eigenpairs(op, 3)
    assert np.all(U[np.argmax(np.abs(U), axis=0), np.arange(3)] > 0)
    V = np.array([[1.0, -3.0], [-2.0, 1.0]])
    np.testing.assert_array_equal(fix_signs(V), [[-1.0, 3.0], [2.0, -1.0]])


def test_non_convergence_carries_report():
    op = helix_operator(400)
    with pytest.raises(ConvergenceError) as info:
        smallest_eigenpairs(op, 2, method="lanczos", max_iter=5)
    rep = info.value.report
    assert isinstance(rep, SolverReport)
    assert not rep.converged
    assert rep.iterations == 5
    assert np.all(np.isfinite(rep.residuals)) and rep.residuals.size
    assert "converged=false" in rep.to_text()


def test_argument_errors():
    A = np.diag([0.0, 1.0])
    with pytest.raises(ValueError):
        smallest_eigenpairs(A, 3)
    with pytest.raises(ValueError):
        smallest_eigenpairs(A, 1, tol=0)
    with pytest.raises(ValueError):
        smallest_eigenpairs(A, 1, method="arpack")
    with pytest.raises(ValueError):
        smallest_eigenpairs(np.zeros((2, 3)), 1)


def test_explicit_deflation_on_matrix():
    A = np.diag([5.0, 0.5, 2.0, 3.0])
    z = np.eye(4)[:, [0]]
    lam, U, _ = smallest_eigenpairs(A, 2, deflate=z, method="dense")
    np.testing.assert_allclose(lam, [5.0, 0.5])
    lam2, _, _ = smallest_eigenpairs(A, 2, deflate=z, method="lanczos")
    np.testing.assert_allclose(lam2, [5.0, 0.5], atol=1e-10)


def test_report_text_is_key_value():
    _, _, rep = smallest_eigenpairs(helix_operator(), 2)
    for line in rep.to_text().splitlines():
        key, _, value = line.partition("=")
        assert key and value


def test_deterministic_lanczos():
    op = helix_operator(300, eta=0.05)
    a = smallest_eigenpairs(op, 2, method="lanczos")[1]
    b = smallest_eigenpairs(op, 2, method="lanczos")[1]
    assert a.tobytes() == b.tobytes()
