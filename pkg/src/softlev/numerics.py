"""Small dense-matrix helpers: Gram matrices, extremal eigenvalues, norms, thin QR.

Everything here operates on float64 arrays of modest size (hundreds of rows,
tens of columns); the heavy lifting is delegated to LAPACK through numpy.
"""

import numpy as np

from . import _kernels
from .errors import RankDeficient, ShapeMismatch


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Coerce to a C-contiguous float64 2-D array, validating finiteness."""
    arr = np.ascontiguousarray(A, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ShapeMismatch(f"{name} must be 2-D with at least one row and column, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(x, name: str = "vector") -> np.ndarray:
    """Coerce to a C-contiguous float64 1-D array, validating finiteness."""
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 1:
        raise ShapeMismatch(f"{name} must be 1-D and non-empty, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise ValueError(f"{name} has non-finite entries")
    return arr


def gram(A) -> np.ndarray:
    """A^T A, symmetrized so that G[i, j] == G[j, i] holds exactly.

    Floating-point matmul does not guarantee bitwise symmetry, so the strict
    upper triangle is computed once and mirrored.
    """
    A = as_matrix(A, "A")
    G = A.T @ A
    return np.triu(G) + np.triu(G, 1).T


def min_eigenvalue(S) -> float:
    """Smallest eigenvalue of a symmetric matrix.

    Sizes one and two use closed forms; larger matrices go through
    ``numpy.linalg.eigvalsh``.
    """
    S = as_matrix(S, "S")
    d = S.shape[0]
    if S.shape[1] != d or not np.array_equal(S, S.T):
        raise ShapeMismatch("S must be square and exactly symmetric")
    if d == 1:
        return float(S[0, 0])
    if d == 2:
        half_tr = 0.5 * (S[0, 0] + S[1, 1])
        disc = np.hypot(0.5 * (S[0, 0] - S[1, 1]), S[0, 1])
        return float(half_tr - disc)
    return float(np.linalg.eigvalsh(S)[0])


def two_to_infty_norm(A) -> float:
    """Largest Euclidean row norm, max_i ||A_i||_2."""
    A = as_matrix(A, "A")
    return float(np.sqrt((A * A).sum(axis=1).max()))


def row_gram_gap(A, B) -> float:
    """sum_i || B_i B_i^T - A_i A_i^T ||_op over rows.

    Each summand is the operator norm of a symmetric matrix of rank at most
    two, so it reduces to a 2x2 eigenvalue problem per row -- no d-by-d
    eigendecompositions.  Bitwise-equal inputs give an exact zero.
    """
    A = as_matrix(A, "A")
    B = as_matrix(B, "B")
    if A.shape != B.shape:
        raise ShapeMismatch(f"A and B must share a shape, got {A.shape} vs {B.shape}")
    return float(_kernels.row_gram_gap(A, B))


def thin_qr(A):
    """Reduced QR factorization A = Q R with a loud rank check.

    Raises ``RankDeficient`` when any |R_kk| falls at or below
    1e-12 times the largest row norm of A (the all-zero matrix included).
    """
    A = as_matrix(A, "A")
    n, d = A.shape
    if n < d:
        raise ShapeMismatch(f"thin QR needs n >= d, got {n} x {d}")
    Q, R = np.linalg.qr(A)
    thresh = _kernels._RANK_RTOL * two_to_infty_norm(A)
    if np.abs(np.diag(R)).min() <= thresh:
        raise RankDeficient(f"matrix is numerically rank-deficient (min |R_kk| = {np.abs(np.diag(R)).min():.3e})")
    return Q, R
