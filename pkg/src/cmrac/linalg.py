"""Dense linear-algebra kernels.

Matrices and vectors are plain float64 numpy arrays. Elementwise arithmetic,
products and transposes use numpy directly; the kernels here are the ones
whose algorithm matters: Gaussian elimination, the Kronecker-vectorized
Lyapunov solve and cyclic Jacobi for symmetric eigenvalues.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import DimensionMismatch, NoConvergence, NotSymmetric, SingularSystem

PIVOT_TOL = 1e-13
MAX_LYAPUNOV_DIM = 16


def as_matrix(a, rows: int | None = None, cols: int | None = None, name: str = "matrix") -> np.ndarray:
    m = np.array(a, dtype=float)
    if m.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {m.shape}")
    if (rows is not None and m.shape[0] != rows) or (cols is not None and m.shape[1] != cols):
        raise DimensionMismatch(f"{name} has shape {m.shape}, expected ({rows}, {cols})")
    if not np.all(np.isfinite(m)):
        raise ValueError(f"{name} contains non-finite entries")
    return m


def as_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    out = np.array(v, dtype=float).reshape(-1)
    if dim is not None and out.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {out.shape[0]}, expected {dim}")
    return out


def frobenius_norm(M: np.ndarray) -> float:
    return math.sqrt(float(np.sum(np.asarray(M) ** 2)))


def quadratic_form(e: np.ndarray, P: np.ndarray) -> float:
    """Return e' P e."""
    e = np.asarray(e, dtype=float)
    if P.shape != (e.shape[0], e.shape[0]):
        raise DimensionMismatch(f"quadratic form: P {P.shape} vs e ({e.shape[0]},)")
    return float(e @ P @ e)


def kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    return np.kron(A, B)


def vec(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(M).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.asarray(v).reshape((rows, cols), order="F")


def solve_linear(A: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve ``A x = b`` by Gaussian elimination with partial pivoting.

    Raises SingularSystem when a pivot falls below ``PIVOT_TOL`` in magnitude.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float).reshape(-1)
    k = A.shape[0]
    if A.ndim != 2 or A.shape[1] != k:
        raise DimensionMismatch(f"solve_linear needs a square matrix, got {A.shape}")
    if b.shape[0] != k:
        raise DimensionMismatch(f"right-hand side has length {b.shape[0]}, expected {k}")

    for col in range(k):
        piv = col + int(np.argmax(np.abs(A[col:, col])))
        if abs(A[piv, col]) < PIVOT_TOL:
            raise SingularSystem(f"pivot {abs(A[piv, col]):.3e} in column {col} below {PIVOT_TOL:g}")
        if piv != col:
            A[[col, piv]] = A[[piv, col]]
            b[[col, piv]] = b[[piv, col]]
        factors = A[col + 1:, col] / A[col, col]
        A[col + 1:, col:] -= np.outer(factors, A[col, col:])
        b[col + 1:] -= factors * b[col]

    x = np.empty(k)
    for row in range(k - 1, -1, -1):
        x[row] = (b[row] - A[row, row + 1:] @ x[row + 1:]) / A[row, row]
    return x


def matrix_rank(M: np.ndarray, tol: float = 1e-10) -> int:
    """Numerical rank via row reduction with partial pivoting."""
    R = np.array(M, dtype=float)
    rows, cols = R.shape
    scale = max(1.0, float(np.max(np.abs(R)))) if R.size else 1.0
    rank = 0
    for col in range(cols):
        if rank == rows:
            break
        piv = rank + int(np.argmax(np.abs(R[rank:, col])))
        if abs(R[piv, col]) <= tol * scale:
            continue
        R[[rank, piv]] = R[[piv, rank]]
        R[rank + 1:, col:] -= np.outer(R[rank + 1:, col] / R[rank, col], R[rank, col:])
        rank += 1
    return rank


def check_symmetric(M: np.ndarray, tol: float = 1e-12, name: str = "matrix") -> None:
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got {M.shape}")
    asym = float(np.max(np.abs(M - M.T))) if M.size else 0.0
    if asym > tol * max(1.0, float(np.max(np.abs(M)))):
        raise NotSymmetric(f"{name} asymmetric by {asym:.3e}")


def solve_lyapunov(A_r: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Solve ``A_r' P + P A_r + Q = 0`` for symmetric P.

    Uses the vectorized form (I kron A_r' + A_r' kron I) vec(P) = -vec(Q),
    which is an n^2 x n^2 dense system; n is capped at 16.
    """
    A_r = as_matrix(A_r, name="A_r")
    n = A_r.shape[0]
    Q = as_matrix(Q, n, n, name="Q")
    if A_r.shape[1] != n:
        raise DimensionMismatch(f"A_r must be square, got {A_r.shape}")
    if n > MAX_LYAPUNOV_DIM:
        raise DimensionMismatch(f"n = {n} exceeds supported size {MAX_LYAPUNOV_DIM}")
    check_symmetric(Q, name="Q")

    eye = np.eye(n)
    K = kron(eye, A_r.T) + kron(A_r.T, eye)
    P = unvec(solve_linear(K, -vec(Q)), n, n)
    return 0.5 * (P + P.T)


def lyapunov_residual(A_r: np.ndarray, P: np.ndarray, Q: np.ndarray) -> float:
    """Frobenius norm of A_r' P + P A_r + Q."""
    return frobenius_norm(A_r.T @ P + P @ A_r + Q)


def jacobi_eigenvalues(M: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps until the off-diagonal Frobenius norm is at most
    ``tol * max(1, |M|_F)``. Returns eigenvalues in ascending order.
    """
    a = np.array(M, dtype=float)
    check_symmetric(a, name="M")
    n = a.shape[0]
    threshold = tol * max(1.0, frobenius_norm(a))

    off_diag = ~np.eye(n, dtype=bool)

    def off_norm(m: np.ndarray) -> float:
        # summed directly: |M|^2 - |diag|^2 cancels catastrophically near convergence
        return math.sqrt(float(np.sum(m[off_diag] ** 2)))

    for _ in range(max_sweeps + 1):
        if off_norm(a) <= threshold:
            return np.sort(np.diag(a).copy())
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                diff = a[q, q] - a[p, p]
                if abs(2.0 * apq) < 1e-150 * abs(diff):
                    t = apq / diff  # theta = diff / (2 apq) would overflow; t -> 1/(2 theta)
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- J' A J with J the (p, q) Givens rotation
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    raise NoConvergence(f"Jacobi: off-diagonal norm {off_norm(a):.3e} after {max_sweeps} sweeps")


def min_eig_sym(M: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    return float(jacobi_eigenvalues(M)[0])
