"""Index-pair samplers with exact queryable probabilities.

Three selection laws are provided:

* ``iid`` -- both indices drawn independently, each with probability
  proportional to its squared row norm (repeats allowed),
* ``without-replacement`` -- the first index as above, the second from the
  remaining rows with renormalized row-norm weights,
* ``volume`` -- an unordered row pair drawn with probability proportional to
  det(A_S A_S^T) = |a_i|^2 |a_j|^2 - <a_i, a_j>^2, returned in uniformly
  random order.

Every sampler draws through a ``SeededRng`` so that equal seeds reproduce
identical index sequences across runs and platforms, and exposes the exact
probability of any ordered draw for goodness-of-fit testing.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateMatrix
from .linalg import as_matrix, row_geometry

IID = "iid"
WITHOUT_REPLACEMENT = "without-replacement"
VOLUME = "volume"

KINDS = (IID, WITHOUT_REPLACEMENT, VOLUME)


class SeededRng:
    """Deterministic uniform source: a PCG64 stream plus a draw counter.

    ``uniform()`` returns one double in [0, 1); ``uniforms(shape)`` returns an
    array filled from the same stream in row-major order, so bulk and scalar
    consumption are interchangeable.
    """

    algorithm = "pcg64"

    def __init__(self, seed: int):
        self.seed = int(seed)
        self.bit_generator = np.random.PCG64(self.seed)
        self.generator = np.random.Generator(self.bit_generator)
        self.draws = 0

    def uniform(self) -> float:
        self.draws += 1
        return float(self.generator.random())

    def uniforms(self, shape) -> np.ndarray:
        u = self.generator.random(shape)
        self.draws += u.size
        return u

    @classmethod
    def for_trial(cls, base_seed: int, trial: int) -> "SeededRng":
        return cls(int(base_seed) + int(trial))


def _pick_index(cum: np.ndarray, weights: np.ndarray, target: float) -> int:
    """Smallest i with cum[i] > target; steps past zero-weight rows that can
    be hit only when the scaled uniform rounds onto an interval boundary."""
    i = int(np.searchsorted(cum, target, side="right"))
    if i >= len(cum):
        i = len(cum) - 1
    while weights[i] == 0.0 and i > 0:
        i -= 1
    return i


class PairSampler:
    """Base class: shared row-weight table and draw bookkeeping."""

    kind: str

    def __init__(self, A):
        self.A = as_matrix(A)
        self.m = self.A.shape[0]
        geom = row_geometry(self.A, with_gram=(self.kind == VOLUME))
        self.row_geometry = geom
        self.row_norms_sq = geom.row_norms_sq
        if np.count_nonzero(self.row_norms_sq) < 2:
            raise DegenerateMatrix("need at least two rows with nonzero norm")
        self.row_cum = np.cumsum(self.row_norms_sq)
        self.row_total = float(self.row_cum[-1])

    def sample_index(self, rng: SeededRng) -> int:
        """One index with probability ||a_i||^2 / ||A||_F^2 (one uniform)."""
        return _pick_index(self.row_cum, self.row_norms_sq, rng.uniform() * self.row_total)

    def index_probability(self, i: int) -> float:
        return float(self.row_norms_sq[i] / self.row_total)

    def sample_pair(self, rng: SeededRng) -> tuple[int, int]:
        """One ordered pair (two uniforms)."""
        raise NotImplementedError

    def sample_many(self, rng: SeededRng, size: int) -> np.ndarray:
        """``size`` ordered pairs as an (size, 2) int array, consuming the
        stream exactly as ``size`` repeated ``sample_pair`` calls."""
        raise NotImplementedError

    def pair_probability(self, i1: int, i2: int) -> float:
        """Exact probability of the ordered draw (i1, i2)."""
        raise NotImplementedError

    def probability_matrix(self) -> np.ndarray:
        """(m, m) matrix of ordered-draw probabilities (for tests/GOF)."""
        P = np.empty((self.m, self.m))
        for i in range(self.m):
            for j in range(self.m):
                P[i, j] = self.pair_probability(i, j)
        return P


class IidSampler(PairSampler):
    kind = IID

    def sample_pair(self, rng):
        u = rng.uniforms(2)
        i = _pick_index(self.row_cum, self.row_norms_sq, u[0] * self.row_total)
        j = _pick_index(self.row_cum, self.row_norms_sq, u[1] * self.row_total)
        return i, j

    def sample_many(self, rng, size):
        u = rng.uniforms((size, 2)) * self.row_total
        out = np.searchsorted(self.row_cum, u, side="right")
        np.minimum(out, self.m - 1, out=out)
        if np.any(self.row_norms_sq[out] == 0.0):
            for idx in zip(*np.nonzero(self.row_norms_sq[out] == 0.0)):
                out[idx] = _pick_index(self.row_cum, self.row_norms_sq, u[idx])
        return out.astype(np.int64)

    def pair_probability(self, i1, i2):
        w = self.row_norms_sq
        return float(w[i1] * w[i2]) / (self.row_total * self.row_total)


class WithoutReplacementSampler(PairSampler):
    kind = WITHOUT_REPLACEMENT

    def _second(self, i1: int, u: float) -> int:
        w = self.row_norms_sq
        t = u * (self.row_total - w[i1])
        cum_before = self.row_cum[i1] - w[i1]
        if t >= cum_before:
            t += w[i1]
        j = _pick_index(self.row_cum, w, t)
        if j == i1:  # boundary rounding; take the nearest admissible row
            for cand in range(j - 1, -1, -1):
                if w[cand] > 0.0:
                    return cand
            for cand in range(j + 1, self.m):
                if w[cand] > 0.0:
                    return cand
        return j

    def sample_pair(self, rng):
        u = rng.uniforms(2)
        i = _pick_index(self.row_cum, self.row_norms_sq, u[0] * self.row_total)
        return i, self._second(i, u[1])

    def sample_many(self, rng, size):
        u = rng.uniforms((size, 2))
        first = np.searchsorted(self.row_cum, u[:, 0] * self.row_total, side="right")
        np.minimum(first, self.m - 1, out=first)
        w = self.row_norms_sq
        bad = w[first] == 0.0
        if np.any(bad):
            for idx in np.nonzero(bad)[0]:
                first[idx] = _pick_index(self.row_cum, w, u[idx, 0] * self.row_total)
        w1 = w[first]
        t = u[:, 1] * (self.row_total - w1)
        cum_before = self.row_cum[first] - w1
        t = np.where(t >= cum_before, t + w1, t)
        second = np.searchsorted(self.row_cum, t, side="right")
        np.minimum(second, self.m - 1, out=second)
        bad = (w[second] == 0.0) | (second == first)
        if np.any(bad):
            for idx in np.nonzero(bad)[0]:
                second[idx] = self._second(int(first[idx]), float(u[idx, 1]))
        return np.stack([first, second], axis=1).astype(np.int64)

    def pair_probability(self, i1, i2):
        if i1 == i2:
            return 0.0
        w = self.row_norms_sq
        if w[i1] == 0.0 or w[i2] == 0.0:
            return 0.0
        return float(w[i1] / self.row_total * w[i2] / (self.row_total - w[i1]))


class VolumeSampler(PairSampler):
    """2-element volume sampling via an exact O(m^2) pair-weight table.

    The full table is built once per matrix (O(m^2 n) through the row Gram
    matrix) and reused across right-hand sides; draws invert the cumulative
    sum with binary search.
    """

    kind = VOLUME

    def __init__(self, A):
        super().__init__(A)
        gram = self.row_geometry.gram
        w = self.row_norms_sq
        W = np.outer(w, w) - gram**2
        np.fill_diagonal(W, 0.0)
        np.clip(W, 0.0, None, out=W)  # Cauchy-Schwarz up to roundoff
        iu, ju = np.triu_indices(self.m, k=1)
        self.pair_i = iu.astype(np.int32)
        self.pair_j = ju.astype(np.int32)
        flat = W[iu, ju]
        total = float(flat.sum())
        if total <= 0.0:
            raise DegenerateMatrix("all pair weights are zero (rank <= 1)")
        self.pair_weights = W
        self.pair_weights_flat = flat
        self.pair_cum = np.cumsum(flat)
        self.pair_total = total

    def _unordered(self, u: float) -> int:
        return _pick_index(self.pair_cum, self.pair_weights_flat, u * self.pair_total)

    def sample_pair(self, rng):
        u = rng.uniforms(2)
        k = self._unordered(u[0])
        i, j = int(self.pair_i[k]), int(self.pair_j[k])
        return (i, j) if u[1] < 0.5 else (j, i)

    def sample_many(self, rng, size):
        u = rng.uniforms((size, 2))
        k = np.searchsorted(self.pair_cum, u[:, 0] * self.pair_total, side="right")
        np.minimum(k, len(self.pair_cum) - 1, out=k)
        bad = self.pair_weights_flat[k] == 0.0
        if np.any(bad):
            for idx in np.nonzero(bad)[0]:
                k[idx] = self._unordered(float(u[idx, 0]))
        i = self.pair_i[k].astype(np.int64)
        j = self.pair_j[k].astype(np.int64)
        swap = u[:, 1] >= 0.5
        out = np.stack([np.where(swap, j, i), np.where(swap, i, j)], axis=1)
        return out

    def pair_probability(self, i1, i2):
        if i1 == i2:
            return 0.0
        return float(self.pair_weights[i1, i2]) / (2.0 * self.pair_total)


_SAMPLERS = {
    IID: IidSampler,
    WITHOUT_REPLACEMENT: WithoutReplacementSampler,
    VOLUME: VolumeSampler,
}


def build_sampler(A, kind: str) -> PairSampler:
    """Construct the sampler of the given kind for matrix ``A``.

    Raises ``DegenerateMatrix`` when fewer than two rows have nonzero norm,
    or (volume) when every pair weight vanishes.
    """
    try:
        cls = _SAMPLERS[kind]
    except KeyError:
        raise ValueError(f"unknown sampler kind {kind!r}; expected one of {KINDS}") from None
    return cls(A)
