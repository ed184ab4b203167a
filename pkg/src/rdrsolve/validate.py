"""Self-validation checks surfaced by the ``validate`` CLI command.

Each check returns a dict with ``check``, ``status`` ("pass"/"fail"/
"skipped") and a human-readable ``detail``. All are statistical or oracle
comparisons of the sampling laws and update formulas against independent
computations on a user-supplied matrix.
"""

from __future__ import annotations

import numpy as np
import scipy.stats

from .linalg import as_matrix, spectral_summary
from .problems import make_consistent
from .sampling import IID, KINDS, VOLUME, WITHOUT_REPLACEMENT, SeededRng, build_sampler
from .solvers import amprdr_params, double_reflect, prdr_step
from .theory import expected_double_reflection


def chi_square_gof(counts: np.ndarray, probs: np.ndarray,
                   min_expected: float = 5.0) -> float:
    """p-value of a chi-square test of ``counts`` against ``probs``; cells
    with expected count below ``min_expected`` are pooled into one bucket."""
    total = counts.sum()
    expected = probs * total
    big = expected >= min_expected
    obs = list(counts[big])
    exp = list(expected[big])
    if np.any(~big):
        obs.append(counts[~big].sum())
        exp.append(expected[~big].sum())
    obs = np.asarray(obs, dtype=np.float64)
    exp = np.asarray(exp, dtype=np.float64)
    # guard against drift between the probability table and the draw total
    exp *= obs.sum() / exp.sum()
    return float(scipy.stats.chisquare(obs, exp).pvalue)


def pair_counts(sampler, rng, draws: int, distort: float = 0.0) -> np.ndarray:
    """(m, m) matrix of ordered-pair draw counts. ``distort`` reroutes that
    fraction of draws to the pair (0, 1) -- a test hook for the negative
    control."""
    pairs = sampler.sample_many(rng, draws)
    if distort > 0.0:
        k = int(distort * draws)
        pairs[:k, 0] = 0
        pairs[:k, 1] = 1
    m = sampler.m
    flat = pairs[:, 0] * m + pairs[:, 1]
    return np.bincount(flat, minlength=m * m).reshape(m, m)


def check_sampler_chisquare(A, draws: int = 100_000, seed: int = 0,
                            significance: float = 1e-3,
                            distort: float = 0.0) -> list[dict]:
    """Chi-square goodness of fit of empirical pair frequencies against the
    exact law, for each sampler kind."""
    A = as_matrix(A)
    out = []
    for kind in KINDS:
        sampler = build_sampler(A, kind)
        rng = SeededRng(seed)
        counts = pair_counts(sampler, rng, draws, distort=distort)
        probs = sampler.probability_matrix()
        keep = probs.ravel() > 0.0
        pval = chi_square_gof(counts.ravel()[keep], probs.ravel()[keep])
        # draws that landed on zero-probability cells are unconditional failures
        stray = int(counts.ravel()[~keep].sum())
        ok = pval >= significance and stray == 0
        out.append({
            "check": f"chi-square[{kind}]",
            "status": "pass" if ok else "fail",
            "detail": f"p-value {pval:.4g} over {draws} draws, {stray} impossible draws",
        })
    return out


def check_expected_operator(A, draws: int = 100_000, seed: int = 0,
                            n_sigma: float | None = None) -> list[dict]:
    """Monte-Carlo estimate of the expected double-reflection operator
    against its closed form, entrywise within ``n_sigma`` standard errors.

    The estimate averages T_j T_i over sampled ordered pairs; the per-pair
    operators are precomputed and combined by draw counts, which is the same
    sum in a different order. When ``n_sigma`` is None it is set to
    sqrt(2 log k) + 2 for k matrix entries, so the family-wise false-alarm
    rate stays small for matrices of any size.
    """
    A = as_matrix(A)
    m, n = A.shape
    if n_sigma is None:
        n_sigma = float(np.sqrt(2.0 * np.log(max(n * n, 2))) + 2.0)
    w = np.einsum("ij,ij->i", A, A)
    T = np.empty((m, n, n))
    for i in range(m):
        T[i] = np.eye(n) - 2.0 * np.outer(A[i], A[i]) / w[i]
    out = []
    for kind in (WITHOUT_REPLACEMENT, VOLUME):
        sampler = build_sampler(A, kind)
        rng = SeededRng(seed)
        counts = pair_counts(sampler, rng, draws)
        mean = np.zeros((n, n))
        second = np.zeros((n, n))
        for i in range(m):
            for j in range(m):
                c = counts[i, j]
                if c == 0:
                    continue
                op = T[j] @ T[i]  # first reflection i, then j
                mean += c * op
                second += c * op * op
        mean /= draws
        second /= draws
        stderr = np.sqrt(np.maximum(second - mean**2, 0.0) / draws)
        closed = expected_double_reflection(A, kind)
        gap = np.abs(mean - closed)
        tol = n_sigma * stderr + 1e-12
        ok = bool(np.all(gap <= tol))
        worst = float(np.max(gap / np.maximum(stderr, 1e-30)))
        out.append({
            "check": f"expected-operator[{kind}]",
            "status": "pass" if ok else "fail",
            "detail": f"max |MC - closed| = {float(np.max(gap)):.3e} "
                      f"({worst:.2f} standard errors, limit {n_sigma:.2f})",
        })
    return out


def check_adaptive_params(A, systems: int = 20, seed: int = 0,
                          rel_tol: float = 1e-8) -> list[dict]:
    """Closed-form adaptive (alpha, beta) against a 2-variable least-squares
    oracle that is allowed to use the known solution."""
    A = as_matrix(A)
    rng = SeededRng(seed)
    sampler = build_sampler(A, WITHOUT_REPLACEMENT)
    worst = 0.0
    tested = 0
    for s in range(systems):
        problem = make_consistent(A, seed=seed * 1000 + s)
        x_ref = problem.reference_for()
        x_prev = np.zeros(A.shape[1])
        x = prdr_step(x_prev, sampler.sample_pair(rng), A, problem.b, 0.5)
        for _ in range(3):
            pair = sampler.sample_pair(rng)
            z, _, _ = double_reflect(x, pair, A, problem.b)
            if np.linalg.norm(z - x) <= 1e-12:
                continue
            p = amprdr_params(x, x_prev, z, pair, A, problem.b)
            d = x - x_prev
            basis = np.stack([z - x, d], axis=1)
            g = basis.T @ basis
            det_scale = g[0, 0] * g[1, 1]
            if np.linalg.det(g) <= 1e-10 * det_scale:
                continue
            coef = np.linalg.solve(g, basis.T @ (x_ref - x))
            worst = max(worst, abs(coef[0] - p.alpha) / max(abs(coef[0]), 1e-30),
                        abs(coef[1] - p.beta) / max(abs(coef[1]), 1e-30))
            tested += 1
            x_prev, x = x, x + p.alpha * (z - x) + p.beta * d
    ok = tested > 0 and worst <= rel_tol
    return [{
        "check": "adaptive-params-vs-oracle",
        "status": "pass" if ok else "fail",
        "detail": f"max relative gap {worst:.3e} over {tested} steps (limit {rel_tol})",
    }]


def validate_matrix(A, draws: int = 100_000, seed: int = 0,
                    distort: float = 0.0) -> list[dict]:
    """Run every validation check on ``A``; rank < 2 yields skipped results."""
    A = as_matrix(A)
    if spectral_summary(A).numeric_rank < 2:
        return [{"check": c, "status": "skipped",
                 "detail": "rank(A) < 2: pair-based methods are undefined"}
                for c in ("chi-square", "expected-operator", "adaptive-params-vs-oracle")]
    out = []
    out.extend(check_sampler_chisquare(A, draws=draws, seed=seed, distort=distort))
    out.extend(check_expected_operator(A, draws=draws, seed=seed))
    out.extend(check_adaptive_params(A, seed=seed))
    return out
