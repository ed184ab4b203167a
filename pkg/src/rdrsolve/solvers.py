"""Iterative solvers for consistent linear systems.

Methods
-------
``rk``        row projection with i.i.d. row-norm sampling (baseline)
``rdr``       double reflection, i.i.d. pair, fixed relaxation
``mrdr``      ``rdr`` plus fixed heavy-ball momentum
``prdr-i``    double reflection, without-replacement pair sampling
``prdr-ii``   double reflection, 2-element volume sampling
``amprdr-i``  adaptive relaxation/momentum on without-replacement pairs
``amprdr-ii`` adaptive relaxation/momentum on volume-sampled pairs

``solve`` runs whichever backend is active: the compiled extension when it
imported cleanly, otherwise the pure-Python loop in this module. Both consume
the same uniform stream, so they make identical sampling decisions; iterates
may differ in the last few ulps because summation order differs.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateStep, StalledAtNonSolution, ZeroRow
from .linalg import as_vector
from .problems import LinearProblem
from .sampling import IID, VOLUME, WITHOUT_REPLACEMENT, PairSampler, SeededRng, build_sampler

METHODS = ("rk", "rdr", "mrdr", "prdr-i", "prdr-ii", "amprdr-i", "amprdr-ii")

SAMPLER_FOR = {
    "rk": IID,
    "rdr": IID,
    "mrdr": IID,
    "prdr-i": WITHOUT_REPLACEMENT,
    "prdr-ii": VOLUME,
    "amprdr-i": WITHOUT_REPLACEMENT,
    "amprdr-ii": VOLUME,
}

#: relative Gram-determinant guard below which the adaptive step falls back
#: to relaxation 1/2 with no momentum
DENOM_GUARD = 1e-14


def project_hyperplane(x, a, bi: float) -> np.ndarray:
    """Orthogonal projection of x onto the hyperplane <a, y> = bi."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = float(a @ a)
    if w == 0.0:
        raise ZeroRow("cannot project onto a zero row")
    return x - ((float(a @ x) - bi) / w) * a


def reflect_hyperplane(x, a, bi: float) -> np.ndarray:
    """Mirror image of x across the hyperplane <a, y> = bi."""
    a = np.asarray(a, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64)
    w = float(a @ a)
    if w == 0.0:
        raise ZeroRow("cannot reflect across a zero row")
    return x - (2.0 * (float(a @ x) - bi) / w) * a


def double_reflect(x, pair, A, b) -> tuple[np.ndarray, float, float]:
    """Sequential reflection across rows i1 then i2.

    Returns (z, u, v) with z = x - 2 u a_{i1} - 2 v a_{i2}; u and v are the
    scaled residuals that make the two reflections a single linear
    combination of the two rows.
    """
    i1, i2 = pair
    x = np.asarray(x, dtype=np.float64)
    a1, a2 = A[i1], A[i2]
    w1, w2 = float(a1 @ a1), float(a2 @ a2)
    if w1 == 0.0 or w2 == 0.0:
        raise ZeroRow(f"zero row in pair ({i1}, {i2})")
    u = (float(a1 @ x) - b[i1]) / w1
    v = (float(a2 @ x) - b[i2] - 2.0 * float(a2 @ a1) * u) / w2
    z = x - (2.0 * u) * a1 - (2.0 * v) * a2
    return z, u, v


def prdr_step(x, pair, A, b, alpha: float) -> np.ndarray:
    """Relaxed double-reflection update (1 - alpha) x + alpha z."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    z, _, _ = double_reflect(x, pair, A, b)
    return (1.0 - alpha) * np.asarray(x, dtype=np.float64) + alpha * z


def mrdr_step(x, x_prev, pair, A, b, alpha: float, beta: float) -> np.ndarray:
    """Relaxed double reflection plus fixed heavy-ball momentum."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    if beta < 0.0:
        raise ValueError("beta must be nonnegative")
    x = np.asarray(x, dtype=np.float64)
    z, _, _ = double_reflect(x, pair, A, b)
    return (1.0 - alpha) * x + alpha * z + beta * (x - np.asarray(x_prev, dtype=np.float64))


@dataclass(frozen=True)
class StepParams:
    """Adaptive step parameters plus the reflection coefficients they used."""

    alpha: float
    beta: float
    u: float
    v: float


def amprdr_params(x, x_prev, z, pair, A, b, zero_tol: float = 1e-16) -> StepParams:
    """Closed-form relaxation and momentum minimizing the distance to the
    projection of the start point onto the solution set, using only rows of
    A, entries of b and the two iterates.

    Falls back to (1/2, 0) when the Gram determinant of the two step
    directions is below the relative guard (this covers x_prev = x).
    Raises ``DegenerateStep`` when z equals x within ``zero_tol``.
    """
    i1, i2 = pair
    x = np.asarray(x, dtype=np.float64)
    x_prev = np.asarray(x_prev, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    zx = z - x
    zx_sq = float(zx @ zx)
    if math.sqrt(zx_sq) <= zero_tol:
        raise DegenerateStep("z equals the current iterate; resample the pair")
    a1, a2 = A[i1], A[i2]
    w1, w2 = float(a1 @ a1), float(a2 @ a2)
    r1 = float(a1 @ x) - b[i1]
    r2 = float(a2 @ x) - b[i2]
    u = r1 / w1
    v = (r2 - 2.0 * float(a2 @ a1) * u) / w2
    h = u * a1 + v * a2
    d = x - x_prev
    hh = float(h @ h)
    dd = float(d @ d)
    hd = float(h @ d)
    den = dd * hh - hd * hd
    if den <= DENOM_GUARD * dd * zx_sq:
        return StepParams(alpha=0.5, beta=0.0, u=u, v=v)
    e = u * r1 + v * r2
    return StepParams(alpha=dd * e / (2.0 * den), beta=hd * e / den, u=u, v=v)


@dataclass
class SolverState:
    """Mutable per-run state: current/previous iterate, counter, RNG, trace."""

    x_curr: np.ndarray
    x_prev: np.ndarray
    iteration: int
    rng: SeededRng
    trace: list = field(default_factory=list)


@dataclass
class SolveOptions:
    """Method selection plus every tolerance of the stopping logic."""

    method: str = "prdr-ii"
    alpha: float = 0.5
    beta: float = 0.0
    rse_tol: float = 1e-12
    max_iters: int = 10_000_000
    zero_tol: float = 1e-16
    seed: int = 0
    trace_stride: int = 10
    stopping: str = "rse"  # "rse" (needs a reference solution) or "residual"
    backend: str = "auto"  # "auto" | "compiled" | "python"
    resample_factor: int = 100  # resample limit = factor * m (adaptive methods)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.rse_tol <= 0 or self.zero_tol < 0:
            raise ValueError("rse_tol must be positive and zero_tol nonnegative")
        if self.trace_stride < 1:
            raise ValueError("trace_stride must be >= 1")
        if self.stopping not in ("rse", "residual"):
            raise ValueError("stopping must be 'rse' or 'residual'")


@dataclass
class SolveResult:
    """Final iterate, cost counters and the recorded (iteration, error,
    seconds) trace of one run."""

    x: np.ndarray
    iterations: int
    trace: np.ndarray  # columns: iteration, rse (or residual), seconds
    termination: str  # "converged" | "max_iters"
    final_rse: float
    wall_seconds: float
    backend: str
    row_ops: int
    draws: int


def amprdr_step(state: SolverState, sampler: PairSampler, problem: LinearProblem,
                options: SolveOptions):
    """One adaptive step: resample until the double reflection moves x, then
    apply the closed-form parameters.

    Returns the next iterate, or None when the resample budget is exhausted
    and x already solves the system (within the residual tolerance). Raises
    ``StalledAtNonSolution`` when it is exhausted anywhere else.
    """
    A, b = problem.A, problem.b
    x = state.x_curr
    limit = options.resample_factor * A.shape[0]
    pair = None
    z = None
    for _ in range(limit):
        pair = sampler.sample_pair(state.rng)
        z, _, _ = double_reflect(x, pair, A, b)
        if float(np.linalg.norm(z - x)) > options.zero_tol:
            break
    else:
        resid = float(np.linalg.norm(A @ x - b))
        if resid <= math.sqrt(options.rse_tol) * max(1.0, float(np.linalg.norm(b))):
            return None
        raise StalledAtNonSolution(
            f"{limit} consecutive pairs left the iterate fixed at residual {resid:.3e}"
        )
    if state.iteration == 0:
        alpha, beta = 0.5, 0.0
    else:
        p = amprdr_params(x, state.x_prev, z, pair, A, b, zero_tol=options.zero_tol)
        alpha, beta = p.alpha, p.beta
    return (1.0 - alpha) * x + alpha * z + beta * (x - state.x_prev)


def _error_value(problem, x, x_ref, ref_denom, stopping):
    if stopping == "rse":
        diff = x - x_ref
        return float(diff @ diff) / ref_denom
    resid = float(np.linalg.norm(problem.A @ x - problem.b))
    return resid / max(1e-300, float(np.linalg.norm(problem.b)))


def _solve_python(problem: LinearProblem, options: SolveOptions, sampler: PairSampler,
                  x0: np.ndarray, x_ref: np.ndarray | None) -> SolveResult:
    A, b = problem.A, problem.b
    method = options.method
    rng = SeededRng(options.seed)
    state = SolverState(x_curr=x0.copy(), x_prev=x0.copy(), iteration=0, rng=rng)
    if options.stopping == "rse":
        ref_denom = float(x_ref @ x_ref)
        if ref_denom == 0.0:
            ref_denom = 1.0
    else:
        ref_denom = 1.0
    tol = options.rse_tol if options.stopping == "rse" else math.sqrt(options.rse_tol)
    err = _error_value(problem, state.x_curr, x_ref, ref_denom, options.stopping)
    t0 = time.perf_counter()
    trace = [(0, err, 0.0)]
    alpha, beta = options.alpha, options.beta
    k = 0
    termination = "max_iters"
    while err > tol and k < options.max_iters:
        x = state.x_curr
        if method == "rk":
            i = sampler.sample_index(rng)
            a = A[i]
            x_new = x - ((float(a @ x) - b[i]) / sampler.row_norms_sq[i]) * a
        elif method in ("rdr", "prdr-i", "prdr-ii"):
            pair = sampler.sample_pair(rng)
            z, _, _ = double_reflect(x, pair, A, b)
            x_new = (1.0 - alpha) * x + alpha * z
        elif method == "mrdr":
            pair = sampler.sample_pair(rng)
            z, _, _ = double_reflect(x, pair, A, b)
            x_new = (1.0 - alpha) * x + alpha * z + beta * (x - state.x_prev)
        else:  # amprdr-i / amprdr-ii
            x_new = amprdr_step(state, sampler, problem, options)
            if x_new is None:
                termination = "converged"
                break
        state.x_prev = x
        state.x_curr = x_new
        k += 1
        state.iteration = k
        err = _error_value(problem, x_new, x_ref, ref_denom, options.stopping)
        if k % options.trace_stride == 0:
            trace.append((k, err, time.perf_counter() - t0))
    if err <= tol:
        termination = "converged"
    if trace[-1][0] != k:
        trace.append((k, err, time.perf_counter() - t0))
    wall = time.perf_counter() - t0
    state.trace = trace
    return SolveResult(
        x=state.x_curr,
        iterations=k,
        trace=np.asarray(trace, dtype=np.float64),
        termination=termination,
        final_rse=err,
        wall_seconds=wall,
        backend="python",
        row_ops=k if method == "rk" else 2 * k,
        draws=rng.draws,
    )


def _solve_compiled(problem, options, sampler, x0, x_ref) -> SolveResult:
    from . import _kernels  # noqa: PLC0415 -- optional extension

    method_code = {"rk": 0, "rdr": 1, "prdr-i": 1, "prdr-ii": 1, "mrdr": 2,
                   "amprdr-i": 3, "amprdr-ii": 3}[options.method]
    samp_code = {IID: 0, WITHOUT_REPLACEMENT: 1, VOLUME: 2}[sampler.kind]
    A, b = problem.A, problem.b
    m = A.shape[0]
    x = x0.copy()
    x_prev = x0.copy()
    ref_denom = float(x_ref @ x_ref)
    if ref_denom == 0.0:
        ref_denom = 1.0
    if sampler.kind == VOLUME:
        pair_cum = sampler.pair_cum
        pair_w = sampler.pair_weights_flat
        pair_i, pair_j = sampler.pair_i, sampler.pair_j
        pair_total = sampler.pair_total
    else:
        pair_cum = pair_w = None
        pair_i = pair_j = None
        pair_total = 0.0
    gram = sampler.row_geometry.gram  # present for volume, else None
    rng = SeededRng(options.seed)
    cap = options.max_iters // options.trace_stride + 3
    tr_iter = np.empty(cap, dtype=np.int64)
    tr_rse = np.empty(cap, dtype=np.float64)
    tr_sec = np.empty(cap, dtype=np.float64)
    z_buf = np.empty_like(x)
    resid_tol = math.sqrt(options.rse_tol) * max(1.0, float(np.linalg.norm(b)))
    t0 = time.perf_counter()
    status, iters, final_rse, tlen, ndraws = _kernels.run_solve(
        method_code, samp_code, A, b, x, x_prev, z_buf, x_ref, ref_denom,
        sampler.row_norms_sq, sampler.row_cum, sampler.row_total,
        pair_cum, pair_w, pair_i, pair_j, pair_total, gram,
        rng.bit_generator, options.alpha, options.beta,
        options.rse_tol, options.max_iters, options.zero_tol,
        options.resample_factor * m, resid_tol, options.trace_stride,
        tr_iter, tr_rse, tr_sec,
    )
    wall = time.perf_counter() - t0
    rng.draws += ndraws
    if status == 2:
        raise StalledAtNonSolution(
            f"{options.resample_factor * m} consecutive pairs left the iterate fixed"
        )
    trace = np.stack([tr_iter[:tlen].astype(np.float64), tr_rse[:tlen], tr_sec[:tlen]], axis=1)
    return SolveResult(
        x=x,
        iterations=int(iters),
        trace=trace,
        termination="converged" if status in (0, 3) else "max_iters",
        final_rse=float(final_rse),
        wall_seconds=wall,
        backend="compiled",
        row_ops=int(iters) if options.method == "rk" else 2 * int(iters),
        draws=int(ndraws),
    )


def have_compiled_backend() -> bool:
    try:
        from . import _kernels  # noqa: F401, PLC0415
    except ImportError:
        return False
    return True


def active_backend(requested: str = "auto") -> str:
    """Resolve a backend request against what is importable."""
    if requested == "python":
        return "python"
    if requested == "compiled":
        if not have_compiled_backend():
            raise RuntimeError("compiled backend requested but the extension is not built")
        return "compiled"
    if requested == "auto":
        return "compiled" if have_compiled_backend() else "python"
    raise ValueError(f"unknown backend {requested!r}")


def solve(problem: LinearProblem, options: SolveOptions | None = None,
          sampler: PairSampler | None = None, x0=None) -> SolveResult:
    """Run the selected method on ``problem`` until the stopping rule fires.

    A prebuilt sampler may be passed to amortize volume-sampling
    preprocessing across runs; it must match the method's sampling law.
    The result is returned even when the iteration budget runs out
    (``termination == "max_iters"``).
    """
    options = options or SolveOptions()
    n = problem.A.shape[1]
    x0 = np.zeros(n) if x0 is None else as_vector(x0, n).copy()
    kind = SAMPLER_FOR[options.method]
    if sampler is None:
        sampler = build_sampler(problem.A, kind)
    elif sampler.kind != kind:
        raise ValueError(f"method {options.method!r} needs a {kind!r} sampler, "
                         f"got {sampler.kind!r}")
    x_ref = problem.reference_for(x0) if options.stopping == "rse" else None
    backend = active_backend(options.backend)
    if backend == "compiled" and options.stopping == "rse":
        return _solve_compiled(problem, options, sampler, x0, x_ref)
    return _solve_python(problem, options, sampler, x0, x_ref)
