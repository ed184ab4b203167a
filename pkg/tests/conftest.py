import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)


def random_rank_matrix(rng, m, n, rank):
    """Random m x n matrix with the given exact rank, O(1) singular values."""
    U = np.linalg.qr(rng.standard_normal((m, rank)))[0]
    V = np.linalg.qr(rng.standard_normal((n, rank)))[0]
    s = rng.uniform(0.5, 2.0, rank)
    return np.ascontiguousarray((U * s) @ V.T)


def null_space_basis(A):
    """Orthonormal basis of null(A) from the SVD."""
    A = np.asarray(A, dtype=np.float64)
    _, s, Vt = np.linalg.svd(A)
    tol = max(A.shape) * (s[0] if s.size else 0.0) * np.finfo(float).eps
    r = int(np.sum(s > tol))
    return Vt[r:].T
