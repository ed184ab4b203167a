"""Multi-trial benchmark harness: runs seeded trials of several methods on
one problem, writes per-iteration traces and a summary table as CSV.

Trial t of every method uses seed ``base_seed + t``. Trials are dispatched
to a thread pool (the compiled kernels release the GIL); rows are written in
sorted order regardless of completion order, so output is deterministic
apart from the wall-clock ``seconds`` column, which ``timing="none"`` zeroes
out for byte-identical reruns.
"""

from __future__ import annotations

import csv
import os
import statistics
import time
from dataclasses import dataclass, field, replace
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import RdrSolveError
from .problems import LinearProblem
from .sampling import build_sampler
from .solvers import SAMPLER_FOR, SolveOptions, solve

TRACE_HEADER = ("method", "trial", "iteration", "rse", "seconds")
SUMMARY_HEADER = ("method", "median_iters", "mean_iters", "mean_seconds", "success_rate")


@dataclass
class TrialRecord:
    """Outcome of one (method, trial) run."""

    method: str
    trial: int
    iterations: int
    wall_seconds: float
    final_rse: float
    terminated: str  # "converged" | "max_iters" | "error: ..."


@dataclass
class ExperimentConfig:
    """A benchmark: one problem, several methods, seeded repeated trials."""

    methods: list[SolveOptions]
    trials: int = 20
    base_seed: int = 0
    rse_tol: float = 1e-12
    output_dir: str = "."
    trace_stride: int = 10
    jobs: int | None = None
    include_preprocess: bool = False
    timing: str = "wall"  # "wall" | "none" (zero the seconds column)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.methods:
            raise ValueError("at least one method is required")


@dataclass
class ExperimentResult:
    records: list[TrialRecord]
    trace_rows: list[tuple]
    preprocess_seconds: dict[str, float] = field(default_factory=dict)


def run_experiment(problem: LinearProblem, config: ExperimentConfig) -> ExperimentResult:
    """Run every (method, trial) pair and collect records plus trace rows."""
    problem.reference_for()  # build the reference once, shared by all trials
    samplers = {}
    build_seconds = {}
    for opts in config.methods:
        kind = SAMPLER_FOR[opts.method]
        if kind not in samplers:
            t0 = time.perf_counter()
            samplers[kind] = build_sampler(problem.A, kind)
            build_seconds[kind] = time.perf_counter() - t0

    def one(task):
        opts, trial = task
        run_opts = replace(opts, seed=config.base_seed + trial,
                           rse_tol=config.rse_tol, trace_stride=config.trace_stride)
        try:
            res = solve(problem, run_opts, sampler=samplers[SAMPLER_FOR[opts.method]])
        except RdrSolveError as exc:
            rec = TrialRecord(opts.method, trial, 0, 0.0, float("nan"),
                              f"error: {type(exc).__name__}")
            return rec, []
        wall = res.wall_seconds
        if config.include_preprocess:
            wall += build_seconds[SAMPLER_FOR[opts.method]]
        rec = TrialRecord(opts.method, trial, res.iterations, wall,
                          res.final_rse, res.termination)
        rows = [(opts.method, trial, int(it), rse, sec) for it, rse, sec in res.trace]
        return rec, rows

    tasks = [(opts, t) for opts in config.methods for t in range(config.trials)]
    jobs = config.jobs or os.cpu_count() or 1
    records: list[TrialRecord] = []
    trace_rows: list[tuple] = []
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        for rec, rows in pool.map(one, tasks):
            records.append(rec)
            trace_rows.extend(rows)
    records.sort(key=lambda r: (r.method, r.trial))
    trace_rows.sort(key=lambda r: (r[0], r[1], r[2]))
    if config.timing == "none":
        trace_rows = [(m, t, i, r, 0.0) for (m, t, i, r, _s) in trace_rows]
        records = [replace(r, wall_seconds=0.0) for r in records]
    return ExperimentResult(records=records, trace_rows=trace_rows,
                            preprocess_seconds=build_seconds)


def summarize(records: list[TrialRecord]) -> list[dict]:
    """Per-method summary statistics in method-name order."""
    out = []
    for method in sorted({r.method for r in records}):
        rows = [r for r in records if r.method == method]
        ok = [r for r in rows if r.terminated == "converged"]
        out.append({
            "method": method,
            "median_iters": statistics.median(r.iterations for r in rows),
            "mean_iters": statistics.fmean(r.iterations for r in rows),
            "mean_seconds": statistics.fmean(r.wall_seconds for r in rows),
            "success_rate": len(ok) / len(rows),
        })
    return out


def write_trace_csv(path, trace_rows) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(TRACE_HEADER)
        for method, trial, iteration, rse, sec in trace_rows:
            wr.writerow([method, trial, iteration, repr(float(rse)), repr(float(sec))])


def write_summary_csv(path, summaries) -> None:
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(SUMMARY_HEADER)
        for s in summaries:
            wr.writerow([s["method"], repr(float(s["median_iters"])),
                         repr(float(s["mean_iters"])), repr(float(s["mean_seconds"])),
                         repr(float(s["success_rate"]))])


def read_trace_csv(path) -> list[tuple]:
    """Parse a trace.csv back into (method, trial, iteration, rse, seconds)."""
    rows = []
    with open(path, newline="") as f:
        rd = csv.reader(f)
        header = next(rd, None)
        if header is None or tuple(header) != TRACE_HEADER:
            raise RdrSolveError(f"{path}: not a trace file (bad header {header})")
        for rec in rd:
            rows.append((rec[0], int(rec[1]), int(rec[2]), float(rec[3]), float(rec[4])))
    return rows


def averaged_series(trace_rows, method: str):
    """Trial-averaged (iterations, seconds, rse) arrays for one method.

    Averages are taken per recorded iteration value over the trials still
    running at that iteration.
    """
    per_iter: dict[int, list[tuple[float, float]]] = {}
    for m, _trial, it, rse, sec in trace_rows:
        if m == method:
            per_iter.setdefault(it, []).append((rse, sec))
    its = np.array(sorted(per_iter), dtype=np.float64)
    rses = np.array([statistics.fmean(v[0] for v in per_iter[int(i)]) for i in its])
    secs = np.array([statistics.fmean(v[1] for v in per_iter[int(i)]) for i in its])
    return its, secs, rses
