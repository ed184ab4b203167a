"""Theoretical rate machinery: the matrices M and N, contraction factors,
closed-form expected double-reflection operators, and per-step diagnostics.

Conventions
-----------
``build_M`` evaluates its defining expression entrywise, which is *not*
symmetric (the off-diagonal denominators vary by column). Only the quadratic
form x^T M x enters the convergence bounds, and that is invariant under
symmetrization, so every spectral quantity here uses (M + M^T)/2. The raw
matrix is what the closed-form expected operator needs, so it is returned
unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMatrix, DegenerateStep
from .linalg import as_matrix, as_vector, row_geometry, spectral_summary
from .sampling import IID, VOLUME, WITHOUT_REPLACEMENT


def delta_sum(A) -> float:
    """Sum over rows of ||a_j||^2 / (||A||_F^2 - ||a_j||^2)."""
    geom = row_geometry(A)
    denom = geom.frob_sq - geom.row_norms_sq
    if np.any(denom <= 0.0):
        raise DegenerateMatrix("a single row carries the whole Frobenius mass")
    return float(np.sum(geom.row_norms_sq / denom))


def build_M(A) -> np.ndarray:
    """Strategy-I rate matrix: (Delta + 1) I minus the weighted row-product
    matrix with column-dependent denominators. Returned exactly as defined
    (asymmetric); symmetrize before factorization."""
    A = as_matrix(A)
    geom = row_geometry(A, with_gram=True)
    w, gram = geom.row_norms_sq, geom.gram
    denom = geom.frob_sq - w
    if np.any(denom <= 0.0):
        raise DegenerateMatrix("||A||_F^2 - ||a_j||^2 <= 0 for some row")
    delta = float(np.sum(w / denom))
    B = 2.0 * gram / denom[np.newaxis, :]
    np.fill_diagonal(B, w / denom)
    return (delta + 1.0) * np.eye(len(w)) - B


def pairwise_sine_sq(A) -> np.ndarray:
    """Matrix of g_{i,j} = 1 - <a_i,a_j>^2 / (||a_i||^2 ||a_j||^2), with
    g = 0 whenever either row is zero (removes the 0/0)."""
    geom = row_geometry(A, with_gram=True)
    w, gram = geom.row_norms_sq, geom.gram
    ww = np.outer(w, w)
    g = np.zeros_like(ww)
    np.divide(gram**2, ww, out=g, where=ww > 0.0)
    g = 1.0 - g
    g[ww == 0.0] = 0.0
    np.fill_diagonal(g, 0.0)  # g_{i,i} vanishes identically
    return g


def build_N(A) -> np.ndarray:
    """Strategy-II rate matrix: diagonal of sum_j g_{i,j} ||a_j||^2 and
    off-diagonal -g_{i,j} <a_i, a_j>. Symmetric by construction."""
    A = as_matrix(A)
    geom = row_geometry(A, with_gram=True)
    w, gram = geom.row_norms_sq, geom.gram
    g = pairwise_sine_sq(A)
    if not np.any(g * np.outer(w, w) > 0.0):
        raise DegenerateMatrix("all angular weights vanish (rank <= 1)")
    N = -g * gram
    np.fill_diagonal(N, g @ w)
    return N


def volume_normalizer(A) -> float:
    """||A||_F^4 - ||A A^T||_F^2 (twice the total 2-subset volume weight)."""
    geom = row_geometry(A, with_gram=True)
    return geom.frob_sq**2 - float(np.sum(geom.gram**2))


def _sigma_min_sq_weighted(A: np.ndarray, W: np.ndarray) -> float:
    """Smallest nonzero eigenvalue of the symmetrized product A^T W A,
    i.e. sigma_min^2(W^{1/2} A) without forming a matrix square root."""
    Wsym = 0.5 * (W + W.T)
    P = A.T @ Wsym @ A
    P = 0.5 * (P + P.T)
    return spectral_summary(P).sigma_min_nonzero


def rate_rdr(A) -> float:
    """Expected squared-error contraction factor of the i.i.d. double
    reflection method: 1/2 + 1/2 (1 - 2 sigma_min^2(A)/||A||_F^2)^2."""
    A = as_matrix(A)
    summ = spectral_summary(A)
    if summ.numeric_rank < 2:
        raise DegenerateMatrix("rank(A) >= 2 required")
    x = 2.0 * summ.sigma_min_nonzero**2 / row_geometry(A).frob_sq
    return 0.5 + 0.5 * (1.0 - x) ** 2


def rate_prdr(A, alpha: float, kind: str) -> float:
    """Contraction factor of the relaxed double-reflection method under the
    given sampling law (``without-replacement`` or ``volume``)."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    A = as_matrix(A)
    if spectral_summary(A).numeric_rank < 2:
        raise DegenerateMatrix("rank(A) >= 2 required")
    if kind == WITHOUT_REPLACEMENT:
        s2 = _sigma_min_sq_weighted(A, build_M(A))
        return 1.0 - 4.0 * alpha * (1.0 - alpha) * s2 / row_geometry(A).frob_sq
    if kind == VOLUME:
        s2 = _sigma_min_sq_weighted(A, build_N(A))
        return 1.0 - 8.0 * alpha * (1.0 - alpha) * s2 / volume_normalizer(A)
    raise ValueError(f"unsupported sampling kind {kind!r} for this bound")


def expected_double_reflection(A, kind: str) -> np.ndarray:
    """Closed form of E[T_j T_i] for the reflection operators
    T_i = I - 2 a_i a_i^T / ||a_i||^2 under the given sampling law."""
    A = as_matrix(A)
    n = A.shape[1]
    if kind == WITHOUT_REPLACEMENT:
        M = build_M(A)
        return np.eye(n) - (2.0 / row_geometry(A).frob_sq) * (A.T @ M @ A)
    if kind == VOLUME:
        N = build_N(A)
        return np.eye(n) - (4.0 / volume_normalizer(A)) * (A.T @ N @ A)
    if kind == IID:
        # independent draws factorize: (I - 2 A^T A / ||A||_F^2)^2
        E1 = np.eye(n) - 2.0 * (A.T @ A) / row_geometry(A).frob_sq
        return E1 @ E1
    raise ValueError(f"unknown sampling kind {kind!r}")


@dataclass(frozen=True)
class RateReport:
    """Spectral quantities and per-method theoretical contraction factors."""

    delta: float
    M: np.ndarray
    N: np.ndarray
    sigma_min_sq_M_half_A: float
    sigma_min_sq_N_half_A: float
    frob_sq: float
    frob4_minus_gram_frob_sq: float
    alpha: float
    rho_rdr: float
    rho_prdr1: float
    rho_prdr2: float

    def to_dict(self) -> dict:
        from .linalg import is_positive_definite

        return {
            "delta": self.delta,
            "M_pd": bool(is_positive_definite(0.5 * (self.M + self.M.T))),
            "N_pd": bool(is_positive_definite(0.5 * (self.N + self.N.T))),
            "rho_rdr": self.rho_rdr,
            "rho_prdr1": self.rho_prdr1,
            "rho_prdr2": self.rho_prdr2,
            "alpha": self.alpha,
        }


def rate_report(A, alpha: float = 0.5) -> RateReport:
    """Assemble every rate-related quantity for ``A`` at relaxation ``alpha``."""
    A = as_matrix(A)
    if spectral_summary(A).numeric_rank < 2:
        raise DegenerateMatrix("rank(A) >= 2 required")
    M = build_M(A)
    N = build_N(A)
    frob_sq = row_geometry(A).frob_sq
    norm2 = volume_normalizer(A)
    s2m = _sigma_min_sq_weighted(A, M)
    s2n = _sigma_min_sq_weighted(A, N)
    return RateReport(
        delta=delta_sum(A),
        M=M,
        N=N,
        sigma_min_sq_M_half_A=s2m,
        sigma_min_sq_N_half_A=s2n,
        frob_sq=frob_sq,
        frob4_minus_gram_frob_sq=norm2,
        alpha=alpha,
        rho_rdr=rate_rdr(A),
        rho_prdr1=1.0 - 4.0 * alpha * (1.0 - alpha) * s2m / frob_sq,
        rho_prdr2=1.0 - 8.0 * alpha * (1.0 - alpha) * s2n / norm2,
    )


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step geometry of the adaptive update: the squared cosine between
    the half-step error and the in-plane normal direction, plus the Gram
    determinant of {z - x, x - x_prev}."""

    cos2_theta: float
    gram_det: float


def step_diagnostics(x_prev, x, z, x_star) -> StepDiagnostics:
    """Diagnostics for one adaptive step (requires the true projection
    ``x_star``; test/diagnostic use only)."""
    x_prev = np.asarray(x_prev, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    x_star = np.asarray(x_star, dtype=np.float64)
    zx = z - x
    d = x - x_prev
    zx_sq = float(zx @ zx)
    d_sq = float(d @ d)
    cross = float(zx @ d)
    zeta = cross * zx - zx_sq * d
    zeta_sq = float(zeta @ zeta)
    if zeta_sq == 0.0:
        raise DegenerateStep("zeta vanishes (z = x or colinear directions)")
    half = 0.5 * (x + z) - x_star
    half_sq = float(half @ half)
    if half_sq == 0.0:
        cos2 = 0.0
    else:
        cos2 = float(half @ zeta) ** 2 / (half_sq * zeta_sq)
    return StepDiagnostics(cos2_theta=cos2, gram_det=zx_sq * d_sq - cross * cross)


def min_cos2_over_pairs(A, b, x, x_prev, x_star, zero_tol: float = 1e-16) -> float:
    """Enumerate every ordered row pair with a nontrivial double reflection
    and return the smallest cos^2(theta). Exhaustive; meant for small m."""
    from .solvers import double_reflect

    A = as_matrix(A)
    b = as_vector(b, A.shape[0])
    m = A.shape[0]
    nonzero = [i for i in range(m) if A[i] @ A[i] > 0.0]
    best = None
    for i in nonzero:
        for j in nonzero:
            z, _, _ = double_reflect(x, (i, j), A, b)
            if float(np.linalg.norm(z - np.asarray(x))) <= zero_tol:
                continue
            c = step_diagnostics(x_prev, x, z, x_star).cos2_theta
            best = c if best is None else min(best, c)
    if best is None:
        raise DegenerateStep("every pair leaves x fixed (x solves the system)")
    return best
