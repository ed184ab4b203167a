"""Problem construction: spectral-controlled and uniform random generators,
consistent right-hand sides, and Matrix Market ingestion.

Generators are pure functions of their seed (PCG64), so equal seeds give
bitwise-identical matrices on every platform.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np
import scipy.io

from .errors import BadShape, ParseError, UnsupportedField
from .linalg import as_matrix, as_vector, reference_solution

# header grammar: %%MatrixMarket matrix <format> <field> <symmetry>
_MM_FORMATS = {"coordinate", "array"}
_MM_FIELDS = {"real", "integer", "pattern"}
_MM_SYMMETRIES = {"general", "symmetric"}


@dataclass
class LinearProblem:
    """A consistent linear system with optional known generator solution.

    ``x_star`` is the vector used to synthesize ``b`` (when known); the
    reference solution (projection of the initial point onto the solution
    set) is computed lazily and cached for the default start ``x0 = 0``.
    """

    A: np.ndarray
    b: np.ndarray
    x_star: np.ndarray | None = None
    provenance: str = ""
    _x_ref0: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.A = as_matrix(self.A)
        self.b = as_vector(self.b, self.A.shape[0])
        if self.x_star is not None:
            self.x_star = as_vector(self.x_star, self.A.shape[1])

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def reference_for(self, x0=None) -> np.ndarray:
        """Projection of ``x0`` (default: the origin) onto {x : Ax = b}."""
        if x0 is None or not np.any(x0):
            if self._x_ref0 is None:
                zero = np.zeros(self.A.shape[1])
                self._x_ref0 = reference_solution(self.A, self.b, zero)
            return self._x_ref0
        return reference_solution(self.A, self.b, as_vector(x0, self.A.shape[1]))

    def rse(self, x, x0=None) -> float:
        """Relative solution error ||x - x_ref||^2 / ||x_ref||^2."""
        ref = self.reference_for(x0)
        denom = float(ref @ ref)
        diff = np.asarray(x, dtype=np.float64) - ref
        return float(diff @ diff) / (denom if denom > 0.0 else 1.0)


def gen_spectral(m: int, n: int, r: int, sigma1: float, delta: float, seed: int) -> np.ndarray:
    """Random m x n matrix U diag(sigma1, delta, ..., delta) V^T with
    column-orthonormal U, V drawn by reduced QR of standard-normal matrices.

    The ratio sigma1/delta controls how unevenly the row directions spread.
    """
    if not (2 <= r <= min(m, n)):
        raise BadShape(f"need 2 <= r <= min(m, n); got r={r}, m={m}, n={n}")
    if not (sigma1 >= delta > 0):
        raise BadShape(f"need sigma1 >= delta > 0; got sigma1={sigma1}, delta={delta}")
    rng = np.random.Generator(np.random.PCG64(seed))
    U, _ = np.linalg.qr(rng.standard_normal((m, r)))
    V, _ = np.linalg.qr(rng.standard_normal((n, r)))
    d = np.full(r, float(delta))
    d[0] = float(sigma1)
    return np.ascontiguousarray((U * d) @ V.T)


def gen_uniform(m: int, n: int, t: float, seed: int) -> np.ndarray:
    """Random m x n matrix with entries i.i.d. uniform on [t, 1).

    ``t`` close to 1 makes the rows nearly parallel (high coherence).
    """
    if m < 1 or n < 1:
        raise BadShape(f"need m, n >= 1; got m={m}, n={n}")
    if not (0.0 <= t < 1.0):
        raise BadShape(f"need 0 <= t < 1; got t={t}")
    rng = np.random.Generator(np.random.PCG64(seed))
    return np.ascontiguousarray(rng.uniform(t, 1.0, size=(m, n)))


def make_consistent(A, seed: int, provenance: str = "") -> LinearProblem:
    """Draw a standard-normal solution vector and set b = A x_star."""
    A = as_matrix(A)
    rng = np.random.Generator(np.random.PCG64(seed))
    x_star = rng.standard_normal(A.shape[1])
    return LinearProblem(A=A, b=A @ x_star, x_star=x_star, provenance=provenance)


def spectral_problem(m, n, r, sigma1, delta, seed, rhs_seed=None) -> LinearProblem:
    A = gen_spectral(m, n, r, sigma1, delta, seed)
    tag = f"spectral(m={m},n={n},r={r},sigma1={sigma1},delta={delta},seed={seed})"
    return make_consistent(A, seed + 1 if rhs_seed is None else rhs_seed, tag)


def uniform_problem(m, n, t, seed, rhs_seed=None) -> LinearProblem:
    A = gen_uniform(m, n, t, seed)
    tag = f"uniform(m={m},n={n},t={t},seed={seed})"
    return make_consistent(A, seed + 1 if rhs_seed is None else rhs_seed, tag)


def _validate_mm_header(line: str) -> tuple[str, str, str]:
    parts = line.strip().split()
    if len(parts) < 2 or parts[0] != "%%MatrixMarket" or parts[1].lower() != "matrix":
        raise ParseError(f"not a Matrix Market matrix header: {line.strip()!r}")
    if len(parts) != 5:
        raise ParseError(f"malformed Matrix Market header: {line.strip()!r}")
    fmt, fld, sym = (p.lower() for p in parts[2:5])
    if fmt not in _MM_FORMATS:
        raise ParseError(f"unsupported Matrix Market format {fmt!r}")
    if fld not in _MM_FIELDS:
        raise UnsupportedField(f"unsupported Matrix Market field {fld!r}")
    if sym not in _MM_SYMMETRIES:
        raise UnsupportedField(f"unsupported Matrix Market symmetry {sym!r}")
    return fmt, fld, sym


def load_matrix_market(path) -> np.ndarray:
    """Read a Matrix Market file into a dense float64 matrix.

    Supports coordinate and array formats with real/integer/pattern fields
    and general/symmetric storage; duplicate coordinate entries are summed
    and pattern entries become 1.0.
    """
    with open(path, "r", encoding="ascii", errors="replace") as f:
        text = f.read()
    if not text.strip():
        raise ParseError(f"{path}: empty file")
    _validate_mm_header(text.splitlines()[0])
    try:
        mat = scipy.io.mmread(io.StringIO(text))
    except ValueError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    dense = mat.toarray() if hasattr(mat, "toarray") else np.asarray(mat)
    return as_matrix(dense.astype(np.float64))


def write_matrix_market(path, A, comment: str = "") -> None:
    """Write a dense matrix in Matrix Market array format with 17 significant
    digits, enough for an exact float64 round-trip."""
    A = as_matrix(A)
    scipy.io.mmwrite(str(path), A, comment=comment, field="real", precision=17)
