import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cmrac import linalg
from cmrac.exceptions import DimensionMismatch, NoConvergence, NotSymmetric, SingularSystem

from helpers import charpoly_min_root

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


# --- arithmetic on hand-computed 2x2 cases ---------------------------------

def test_basic_2x2_arithmetic():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    B = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.array_equal(A + B, [[1, 3], [4, 4]])
    assert np.array_equal(A @ B, [[2, 1], [4, 3]])
    assert np.array_equal(A.T, [[1, 3], [2, 4]])
    assert np.trace(A) == 5.0
    assert linalg.frobenius_norm(A) == pytest.approx(math.sqrt(30))
    assert np.linalg.norm([3.0, 4.0]) == 5.0
    assert linalg.quadratic_form(np.array([1.0, -1.0]), A) == pytest.approx(1 - 2 - 3 + 4)
    K = linalg.kron(np.eye(2), A)
    assert K.shape == (4, 4)
    assert np.array_equal(K[:2, :2], A) and np.array_equal(K[2:, 2:], A) and not K[:2, 2:].any()


def test_vec_is_column_major_and_roundtrips():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(linalg.vec(A), [1, 3, 2, 4])
    assert np.array_equal(linalg.unvec(linalg.vec(A), 2, 2), A)


def test_as_matrix_validation():
    with pytest.raises(DimensionMismatch):
        linalg.as_matrix([[1.0, 2.0]], rows=2)
    with pytest.raises(ValueError):
        linalg.as_matrix([[1.0, float("nan")]])


# --- solve_linear ----------------------------------------------------------

def test_solve_linear_examples():
    assert np.allclose(linalg.solve_linear(np.eye(2), np.array([3.0, 4.0])), [3, 4])
    assert np.allclose(linalg.solve_linear(np.diag([2.0, 4.0]), np.array([2.0, 2.0])), [1, 0.5])


def test_solve_linear_needs_pivoting():
    A = np.array([[0.0, 1.0], [1.0, 0.0]])
    assert np.allclose(linalg.solve_linear(A, np.array([2.0, 3.0])), [3, 2])


def test_solve_linear_singular():
    with pytest.raises(SingularSystem):
        linalg.solve_linear(np.array([[1.0, 2.0], [2.0, 4.0]]), np.array([1.0, 1.0]))


def test_kronecker_system_residual(paper):
    A_r = paper.reference.A_r
    n = A_r.shape[0]
    I = np.eye(n)
    K = linalg.kron(I, A_r.T) + linalg.kron(A_r.T, I)
    b = -linalg.vec(I)
    x = linalg.solve_linear(K, b)
    assert np.linalg.norm(K @ x - b) <= 1e-10 * (np.linalg.norm(K) * np.linalg.norm(x) + np.linalg.norm(b))


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=finite), arrays(float, 4, elements=finite))
def test_solve_linear_residual_property(A, b):
    A = A + 25.0 * np.eye(4)  # diagonally dominant, hence nonsingular
    x = linalg.solve_linear(A, b)
    assert np.linalg.norm(A @ x - b) <= 1e-10 * (np.linalg.norm(A) * np.linalg.norm(x) + np.linalg.norm(b))


def test_matrix_rank():
    assert linalg.matrix_rank(np.array([[1.0, 2.0], [2.0, 4.0]])) == 1
    assert linalg.matrix_rank(np.eye(3)[:, :2]) == 2


# --- Lyapunov --------------------------------------------------------------

def test_lyapunov_trivial_cases():
    assert np.allclose(linalg.solve_lyapunov(-np.eye(2), np.eye(2)), 0.5 * np.eye(2))
    assert np.allclose(linalg.solve_lyapunov(np.diag([-1.0, -2.0]), np.eye(2)), np.diag([0.5, 0.25]))


def test_lyapunov_rejects_asymmetric_q():
    with pytest.raises(NotSymmetric):
        linalg.solve_lyapunov(-np.eye(2), np.array([[1.0, 0.1], [0.0, 1.0]]))


def test_lyapunov_singular_for_marginal_ar():
    with pytest.raises(SingularSystem):
        linalg.solve_lyapunov(np.array([[0.0, 1.0], [-1.0, 0.0]]), np.eye(2))


def test_lyapunov_paper_fixture(paper, paper_P):
    P = linalg.solve_lyapunov(paper.reference.A_r, np.eye(7))
    assert np.array_equal(P, P.T)
    assert linalg.lyapunov_residual(paper.reference.A_r, P, np.eye(7)) <= 1e-9 * math.sqrt(7)
    assert np.allclose(P, paper_P, rtol=1e-10, atol=1e-12)
    assert linalg.min_eig_sym(P) == pytest.approx(0.024747273991120325, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(arrays(float, (4, 4), elements=finite))
def test_lyapunov_random_hurwitz(M):
    A_r = M - (np.linalg.norm(M) + 1.0) * np.eye(4)
    Q = np.eye(4)
    P = linalg.solve_lyapunov(A_r, Q)
    assert np.array_equal(P, P.T)
    assert linalg.lyapunov_residual(A_r, P, Q) <= 1e-9 * linalg.frobenius_norm(Q)
    assert linalg.min_eig_sym(P) > 0


# --- Jacobi ----------------------------------------------------------------

def test_min_eig_examples():
    assert linalg.min_eig_sym(np.diag([0.5, 0.25])) == 0.25
    assert linalg.min_eig_sym(np.eye(3)) == 1.0


def test_min_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        linalg.min_eig_sym(np.array([[1.0, 2.0], [0.0, 1.0]]))


def test_jacobi_no_convergence():
    M = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]])
    with pytest.raises(NoConvergence):
        linalg.jacobi_eigenvalues(M, max_sweeps=1)


def test_jacobi_tiny_off_diagonal_does_not_overflow():
    M = np.array([[1.0, 1e-300, 0.0], [1e-300, 2.0, 0.0], [0.0, 0.0, 3.0]])
    with np.errstate(over="raise", invalid="raise", divide="raise"):
        assert np.array_equal(linalg.jacobi_eigenvalues(M), [1.0, 2.0, 3.0])


def test_jacobi_vs_charpoly_bisection():
    rng = np.random.default_rng(7)
    for _ in range(50):
        M = rng.normal(size=(3, 3))
        M = 0.5 * (M + M.T)
        assert abs(linalg.min_eig_sym(M) - charpoly_min_root(M)) <= 1e-9


@settings(max_examples=60, deadline=None)
@given(arrays(float, (4, 4), elements=finite), st.floats(0.1, 10), st.floats(-5, 5))
def test_min_eig_scaling_and_shift(M, c, s):
    M = 0.5 * (M + M.T)
    lam = linalg.min_eig_sym(M)
    assert linalg.min_eig_sym(c * M) == pytest.approx(c * lam, abs=1e-9 * (1 + abs(c * lam)))
    assert linalg.min_eig_sym(M + s * np.eye(4)) == pytest.approx(lam + s, abs=1e-9 * (1 + abs(lam + s)))


@settings(max_examples=60, deadline=None)
@given(arrays(float, 7, elements=finite))
def test_quadratic_form_lower_bound(e):
    P = linalg.solve_lyapunov(np.diag([-1.0, -2.0, -3.0, -0.5, -4.0, -1.5, -2.5]) + 0.1 * np.triu(np.ones((7, 7)), 1), np.eye(7))
    assert linalg.quadratic_form(e, P) >= linalg.min_eig_sym(P) * float(e @ e) - 1e-12 * (1 + float(e @ e))
