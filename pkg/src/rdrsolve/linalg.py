"""Dense row-major linear algebra: row geometry, minimum-norm solutions, spectra.

Matrices are plain C-contiguous float64 ndarrays throughout the library; rows
are therefore contiguous and cheap to slice inside the iteration kernels.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BadShape, InconsistentSystem, NotSymmetric

EPS = np.finfo(np.float64).eps

#: relative tolerance used to declare a linear system consistent
TOL_CONSIST = 1e-8

#: pivot threshold (relative to the largest diagonal entry) for PD tests
PD_TOL = 1e-12


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a C-contiguous float64 2-D array and validate it.

    Raises ``BadShape`` for empty or non-2-D input and ``ValueError`` when
    entries are not finite.
    """
    A = np.ascontiguousarray(a, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise BadShape(f"expected a nonempty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix entries must be finite")
    return A


def as_vector(v, n: int | None = None) -> np.ndarray:
    """Coerce ``v`` to a contiguous float64 1-D array of length ``n``."""
    x = np.ascontiguousarray(v, dtype=np.float64).reshape(-1)
    if n is not None and x.shape[0] != n:
        raise BadShape(f"expected a vector of length {n}, got {x.shape[0]}")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector entries must be finite")
    return x


@dataclass(frozen=True)
class RowGeometry:
    """Cached per-row quantities of a matrix.

    ``row_norms_sq[i]`` is the squared Euclidean norm of row i, ``frob_sq``
    their sum (the squared Frobenius norm), and ``gram`` the optional matrix
    of pairwise row inner products.
    """

    row_norms_sq: np.ndarray
    frob_sq: float
    gram: np.ndarray | None = None


def row_geometry(A, with_gram: bool = False) -> RowGeometry:
    """Compute squared row norms, the squared Frobenius norm and optionally
    the row Gram matrix of ``A``."""
    A = as_matrix(A)
    rns = np.einsum("ij,ij->i", A, A)
    gram = None
    if with_gram:
        gram = A @ A.T
        gram = 0.5 * (gram + gram.T)
        np.fill_diagonal(gram, rns)
    return RowGeometry(row_norms_sq=rns, frob_sq=float(rns.sum()), gram=gram)


@dataclass(frozen=True)
class SpectralSummary:
    """Singular values (nonincreasing), numeric rank and smallest nonzero
    singular value of a matrix."""

    singular_values: np.ndarray
    numeric_rank: int
    sigma_min_nonzero: float


def rank_cutoff(singular_values: np.ndarray, m: int, n: int) -> float:
    """Threshold below which singular values count as zero:
    ``max(m, n) * sigma_1 * eps``."""
    if singular_values.size == 0:
        return 0.0
    return max(m, n) * float(singular_values[0]) * EPS


def spectral_summary(B) -> SpectralSummary:
    """Full SVD-based spectral summary of ``B``."""
    B = as_matrix(B)
    s = np.linalg.svd(B, compute_uv=False)
    cut = rank_cutoff(s, *B.shape)
    r = int(np.count_nonzero(s > cut))
    sigma_min = float(s[r - 1]) if r > 0 else 0.0
    return SpectralSummary(singular_values=s, numeric_rank=r, sigma_min_nonzero=sigma_min)


def _svd_solver_parts(A: np.ndarray):
    """Reduced SVD of ``A`` truncated at the numeric-rank cutoff."""
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    cut = rank_cutoff(s, *A.shape)
    r = int(np.count_nonzero(s > cut))
    return U[:, :r], s[:r], Vt[:r]


def min_norm_solution(A, b, tol_consist: float = TOL_CONSIST) -> np.ndarray:
    """Minimum-Euclidean-norm solution of the consistent system Ax = b.

    Computed through the SVD with the standard rank cutoff. Raises
    ``InconsistentSystem`` when the least-squares residual exceeds
    ``tol_consist * max(1, ||b||)``.
    """
    A = as_matrix(A)
    b = as_vector(b, A.shape[0])
    Ur, sr, Vtr = _svd_solver_parts(A)
    x = Vtr.T @ ((Ur.T @ b) / sr) if sr.size else np.zeros(A.shape[1])
    resid = float(np.linalg.norm(A @ x - b))
    if resid > tol_consist * max(1.0, float(np.linalg.norm(b))):
        raise InconsistentSystem(
            f"least-squares residual {resid:.3e} exceeds consistency tolerance"
        )
    return x


def reference_solution(A, b, x0) -> np.ndarray:
    """Orthogonal projection of ``x0`` onto the solution set of Ax = b.

    The result r satisfies Ar = b and r - x0 lies in the row space of A; for
    ``x0 = 0`` it coincides with the minimum-norm solution.
    """
    A = as_matrix(A)
    b = as_vector(b, A.shape[0])
    x0 = as_vector(x0, A.shape[1])
    Ur, sr, Vtr = _svd_solver_parts(A)
    x = Vtr.T @ ((Ur.T @ b) / sr) if sr.size else np.zeros(A.shape[1])
    resid = float(np.linalg.norm(A @ x - b))
    if resid > TOL_CONSIST * max(1.0, float(np.linalg.norm(b))):
        raise InconsistentSystem(
            f"least-squares residual {resid:.3e} exceeds consistency tolerance"
        )
    # x0 + row-space correction: subtract the row-space component of x0
    return x + x0 - Vtr.T @ (Vtr @ x0)


def is_positive_definite(S, pd_tol: float = PD_TOL) -> bool:
    """True iff a diagonally pivoted Cholesky factorization of ``S`` succeeds
    with every pivot above ``pd_tol`` times the largest diagonal entry.

    Raises ``NotSymmetric`` when the relative asymmetry exceeds 1e-12.
    """
    S = as_matrix(S)
    n = S.shape[0]
    if S.shape[1] != n:
        raise BadShape("positive-definiteness requires a square matrix")
    scale = float(np.max(np.abs(S)))
    if scale > 0 and float(np.max(np.abs(S - S.T))) > 1e-12 * scale:
        raise NotSymmetric("matrix is not symmetric within 1e-12 relative tolerance")
    R = S.copy()
    thresh = pd_tol * float(np.max(np.diag(R)))
    for k in range(n):
        p = k + int(np.argmax(np.diag(R)[k:]))
        if p != k:
            R[[k, p]] = R[[p, k]]
            R[:, [k, p]] = R[:, [p, k]]
        pivot = R[k, k]
        if not pivot > thresh:
            return False
        c = R[k + 1 :, k] / pivot
        R[k + 1 :, k + 1 :] -= np.outer(c, R[k, k + 1 :])
        R[k + 1 :, k] = 0.0
        R[k, k + 1 :] = 0.0
    return True
