"""Small dense linear algebra used by the damped Newton step and the test harness.

Everything here works on float64 numpy arrays and never mutates its inputs.
"""

import numpy as np

from .exceptions import DimensionMismatch, EmptyMatrix, NotPositiveDefinite

PIVOT_TOL = 1e-12
SYMMETRY_TOL = 1e-9
JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {A.shape}")
    return A


def _check_symmetric(A):
    scale = max(1.0, float(np.max(np.abs(A)))) if A.size else 1.0
    if not np.allclose(A, A.T, rtol=0.0, atol=SYMMETRY_TOL * scale):
        raise DimensionMismatch("matrix is not symmetric")


def cholesky(A):
    """Lower-triangular factor ``L`` with ``L @ L.T == A``.

    Raises NotPositiveDefinite when a pivot is ``<= PIVOT_TOL``.
    """
    A = _as_square(A)
    n = A.shape[0]
    L = np.zeros_like(A)
    for j in range(n):
        pivot = A[j, j] - L[j, :j] @ L[j, :j]
        if not pivot > PIVOT_TOL:
            raise NotPositiveDefinite(
                f"Cholesky pivot {pivot:.3e} at index {j} is not above {PIVOT_TOL:g}",
                pivot_index=j,
                pivot=float(pivot),
            )
        L[j, j] = np.sqrt(pivot)
        L[j + 1:, j] = (A[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def cholesky_solve(A, b):
    """Solve ``A x = b`` for symmetric positive definite ``A``."""
    A = _as_square(A)
    b = np.asarray(b, dtype=np.float64)
    if b.ndim != 1 or b.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"rhs of length {b.shape} does not match matrix {A.shape}")
    _check_symmetric(A)
    L = cholesky(A)
    n = len(b)
    y = np.empty(n)
    for i in range(n):
        y[i] = (b[i] - L[i, :i] @ y[:i]) / L[i, i]
    x = np.empty(n)
    for i in range(n - 1, -1, -1):
        x[i] = (y[i] - L[i + 1:, i] @ x[i + 1:]) / L[i, i]
    return x


def _off_norm(A):
    return np.sqrt(max(np.sum(A * A) - np.sum(np.diag(A) ** 2), 0.0))


def _round_robin(n):
    """Rounds of disjoint index pairs covering every pair once (circle method)."""
    idx = list(range(n)) + ([-1] if n % 2 else [])
    k = len(idx)
    rounds = []
    for _ in range(k - 1):
        pairs = [(idx[i], idx[k - 1 - i]) for i in range(k // 2)]
        rounds.append(np.array(sorted((min(p), max(p)) for p in pairs if -1 not in p), dtype=int).reshape(-1, 2))
        idx = [idx[0], idx[-1]] + idx[1:-1]
    return rounds


def jacobi_eigenvalues(A):
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.

    Each sweep visits every off-diagonal pair once in round-robin order; the
    rotations of one round act on disjoint index pairs and are applied together.
    """
    A = _as_square(A)
    _check_symmetric(A)
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    tol = JACOBI_TOL * max(1.0, float(np.linalg.norm(A)))
    rounds = _round_robin(n)
    for _ in range(JACOBI_MAX_SWEEPS):
        if _off_norm(A) <= tol:
            break
        for pairs in rounds:
            p, q = pairs[:, 0], pairs[:, 1]
            apq = A[p, q]
            live = apq != 0.0
            if not np.any(live):
                continue
            p, q, apq = p[live], q[live], apq[live]
            # a subnormal apq overflows theta to inf, giving t = 0 (no rotation)
            with np.errstate(over="ignore", divide="ignore"):
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.where(theta == 0.0, 1.0,
                             np.sign(theta) / (np.abs(theta) + np.hypot(theta, 1.0)))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            J = np.eye(n)
            J[p, p] = c
            J[q, q] = c
            J[p, q] = s
            J[q, p] = -s
            A = J.T @ A @ J
            A = 0.5 * (A + A.T)
    return np.sort(np.diag(A))


def min_eigenvalue(A):
    A = _as_square(A)
    if A.size == 0:
        raise EmptyMatrix("empty matrix has no eigenvalues")
    return float(jacobi_eigenvalues(A)[0])


def kron(A, B):
    """Kronecker product; block ``(i, j)`` of the result is ``A[i, j] * B``."""
    return np.kron(np.atleast_2d(np.asarray(A, dtype=np.float64)),
                   np.atleast_2d(np.asarray(B, dtype=np.float64)))


def max_element(A):
    """Signed maximum entry (not the maximum absolute value)."""
    A = np.asarray(A, dtype=np.float64)
    if A.size == 0:
        raise EmptyMatrix("max_element of an empty matrix")
    return float(np.max(A))
