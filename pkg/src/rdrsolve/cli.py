"""Command-line front end: generate problems, run benchmarks, print rate
reports, self-validate the samplers, and plot traces.

Exit codes: 0 success, 2 usage error, 3 data/IO error, 4 numeric degeneracy.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .bench import (
    ExperimentConfig,
    averaged_series,
    read_trace_csv,
    run_experiment,
    summarize,
    write_summary_csv,
    write_trace_csv,
)
from .errors import (
    DegenerateMatrix,
    InconsistentSystem,
    ParseError,
    RdrSolveError,
    StalledAtNonSolution,
    UnsupportedField,
)
from .problems import (
    LinearProblem,
    gen_spectral,
    gen_uniform,
    load_matrix_market,
    make_consistent,
    write_matrix_market,
)
from .solvers import METHODS, SolveOptions, active_backend
from .svgplot import write_line_plot
from .theory import rate_report
from .validate import validate_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_DEGENERATE = 4


def _read_config_file(path) -> dict:
    """Plain ``key = value`` lines; '#' starts a comment."""
    values = {}
    with open(path) as f:
        for lineno, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParseError(f"{path}:{lineno}: expected 'key = value'")
            key, val = (s.strip() for s in line.split("=", 1))
            values[key.replace("-", "_")] = val
    return values


def _add_problem_flags(p: argparse.ArgumentParser):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--matrix", metavar="PATH", help="Matrix Market file to load")
    g.add_argument("--spectral", nargs=5, metavar=("M", "N", "R", "SIGMA1", "DELTA"),
                   help="controlled-spectrum random matrix")
    g.add_argument("--uniform", nargs=3, metavar=("M", "N", "T"),
                   help="uniform [t,1) random matrix")
    p.add_argument("--matrix-seed", type=int, default=11,
                   help="seed for the matrix generator (default 11)")
    p.add_argument("--rhs-seed", type=int, default=1,
                   help="seed for the right-hand-side solution vector (default 1)")


def _build_matrix(args) -> tuple[np.ndarray, str]:
    if args.matrix:
        return load_matrix_market(args.matrix), f"file({args.matrix})"
    if args.spectral:
        m, n, r = (int(v) for v in args.spectral[:3])
        s1, d = (float(v) for v in args.spectral[3:])
        tag = (f"spectral(m={m},n={n},r={r},sigma1={s1},delta={d},"
               f"seed={args.matrix_seed})")
        return gen_spectral(m, n, r, s1, d, args.matrix_seed), tag
    if args.uniform:
        m, n = int(args.uniform[0]), int(args.uniform[1])
        t = float(args.uniform[2])
        tag = f"uniform(m={m},n={n},t={t},seed={args.matrix_seed})"
        return gen_uniform(m, n, t, args.matrix_seed), tag
    raise ParseError("no problem given: use --matrix, --spectral or --uniform")


def _build_problem(args) -> LinearProblem:
    A, tag = _build_matrix(args)
    return make_consistent(A, seed=args.rhs_seed, provenance=tag)


def cmd_generate(args) -> int:
    if args.kind == "spectral":
        A = gen_spectral(args.m, args.n, args.r, args.sigma1, args.delta, args.seed)
        meta = {"kind": "spectral", "m": args.m, "n": args.n, "r": args.r,
                "sigma1": args.sigma1, "delta": args.delta, "seed": args.seed}
    else:
        A = gen_uniform(args.m, args.n, args.t, args.seed)
        meta = {"kind": "uniform", "m": args.m, "n": args.n, "t": args.t,
                "seed": args.seed}
    write_matrix_market(args.out, A, comment=f"generated: {json.dumps(meta)}")
    with open(args.out + ".meta.json", "w") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")
    print(f"wrote {args.out} ({A.shape[0]}x{A.shape[1]}) and {args.out}.meta.json")
    return EXIT_OK


def cmd_bench(args) -> int:
    problem = _build_problem(args)
    methods = []
    for name in args.methods.split(","):
        name = name.strip()
        if name not in METHODS:
            raise ParseError(f"unknown method {name!r}; choose from {', '.join(METHODS)}")
        methods.append(SolveOptions(
            method=name, alpha=args.alpha,
            beta=args.beta if name == "mrdr" else 0.0,
            max_iters=args.max_iters, backend=args.backend,
        ))
    config = ExperimentConfig(
        methods=methods, trials=args.trials, base_seed=args.seed,
        rse_tol=args.rse_tol, output_dir=args.out, trace_stride=args.trace_stride,
        jobs=args.jobs, include_preprocess=args.include_preprocess,
        timing="none" if args.no_timing else "wall",
    )
    os.makedirs(args.out, exist_ok=True)
    result = run_experiment(problem, config)
    trace_path = os.path.join(args.out, "trace.csv")
    summary_path = os.path.join(args.out, "summary.csv")
    write_trace_csv(trace_path, result.trace_rows)
    summaries = summarize(result.records)
    write_summary_csv(summary_path, summaries)
    backend = active_backend(args.backend)
    print(f"problem: {problem.provenance or args.matrix} "
          f"({problem.A.shape[0]}x{problem.A.shape[1]}), backend: {backend}")
    for kind, sec in result.preprocess_seconds.items():
        print(f"sampler preprocessing [{kind}]: {sec:.4f}s "
              f"({'included in' if args.include_preprocess else 'excluded from'} timings)")
    hdr = f"{'method':>10} {'median_iters':>14} {'mean_iters':>14} {'mean_seconds':>13} {'success':>8}"
    print(hdr)
    for s in summaries:
        print(f"{s['method']:>10} {s['median_iters']:>14.1f} {s['mean_iters']:>14.1f} "
              f"{s['mean_seconds']:>13.4f} {s['success_rate']:>8.2f}")
    print(f"wrote {trace_path} and {summary_path}")
    return EXIT_OK


def cmd_rates(args) -> int:
    A, _ = _build_matrix(args)
    report = rate_report(A, alpha=args.alpha)
    payload = report.to_dict()
    text = (
        f"delta                  {report.delta:.12g}\n"
        f"M positive definite    {payload['M_pd']}\n"
        f"N positive definite    {payload['N_pd']}\n"
        f"rho_rdr                {report.rho_rdr:.12g}\n"
        f"rho_prdr1(alpha={args.alpha})  {report.rho_prdr1:.12g}\n"
        f"rho_prdr2(alpha={args.alpha})  {report.rho_prdr2:.12g}\n"
        f"rho_prdr1 <= rho_rdr   {report.rho_prdr1 <= report.rho_rdr}"
    )
    print(text)
    if args.json:
        with open(args.json, "w") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
        print(f"wrote {args.json}")
    return EXIT_OK


def cmd_validate(args) -> int:
    A, _ = _build_matrix(args)
    results = validate_matrix(A, draws=args.draws, seed=args.seed)
    for r in results:
        print(f"[{r['status']:>7}] {r['check']}: {r['detail']}")
    if args.json:
        with open(args.json, "w") as f:
            json.dump(results, f, indent=2)
            f.write("\n")
    if any(r["status"] == "fail" for r in results):
        return 1
    return EXIT_OK


def cmd_plot(args) -> int:
    rows = read_trace_csv(args.trace)
    if not rows:
        raise ParseError(f"{args.trace}: trace has no data rows")
    methods = sorted({r[0] for r in rows})
    os.makedirs(args.out, exist_ok=True)
    wrote = []
    for x_axis, fname in (("iteration", "rse_vs_iteration.svg"),
                          ("seconds", "rse_vs_seconds.svg")):
        series = []
        for method in methods:
            its, secs, rses = averaged_series(rows, method)
            xs = its if x_axis == "iteration" else secs
            series.append((method, xs, rses))
        path = os.path.join(args.out, fname)
        write_line_plot(path, series, x_label=x_axis)
        wrote.append(path)
    print("wrote " + " and ".join(wrote))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rdrsolve",
        description="Randomized Douglas-Rachford solver benchmark harness "
                    "(--config PATH before the subcommand loads 'key = value' defaults)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a random test matrix as .mtx")
    gsub = g.add_subparsers(dest="kind", required=True)
    gs = gsub.add_parser("spectral", help="U diag(sigma1, delta, ...) V^T")
    gs.add_argument("--m", type=int, required=True)
    gs.add_argument("--n", type=int, required=True)
    gs.add_argument("--r", type=int, required=True)
    gs.add_argument("--sigma1", type=float, required=True)
    gs.add_argument("--delta", type=float, default=1.0)
    gs.add_argument("--seed", type=int, default=0)
    gs.add_argument("-o", "--out", default="A.mtx")
    gu = gsub.add_parser("uniform", help="entries i.i.d. uniform on [t, 1)")
    gu.add_argument("--m", type=int, required=True)
    gu.add_argument("--n", type=int, required=True)
    gu.add_argument("--t", type=float, default=0.0)
    gu.add_argument("--seed", type=int, default=0)
    gu.add_argument("-o", "--out", default="A.mtx")
    for sp in (gs, gu):
        sp.set_defaults(func=cmd_generate)

    b = sub.add_parser("bench", help="run seeded multi-trial benchmarks")
    _add_problem_flags(b)
    b.add_argument("--methods", default=",".join(m for m in METHODS if m != "rk"),
                   help="comma-separated method names (default: all pair methods)")
    b.add_argument("--trials", type=int, default=20)
    b.add_argument("--seed", type=int, default=0, help="base seed; trial t uses seed+t")
    b.add_argument("--alpha", type=float, default=0.5)
    b.add_argument("--beta", type=float, default=0.1, help="momentum for mrdr")
    b.add_argument("--rse-tol", type=float, default=1e-12)
    b.add_argument("--max-iters", type=int, default=10_000_000)
    b.add_argument("--trace-stride", type=int, default=10)
    b.add_argument("--jobs", type=int, default=None, help="worker threads (default: cores)")
    b.add_argument("--backend", choices=("auto", "compiled", "python"), default="auto")
    b.add_argument("--include-preprocess", action="store_true",
                   help="charge sampler preprocessing to trial wall time")
    b.add_argument("--no-timing", action="store_true",
                   help="zero the seconds columns for byte-identical reruns")
    b.add_argument("-o", "--out", default="bench-out")
    b.set_defaults(func=cmd_bench)

    r = sub.add_parser("rates", help="print theoretical contraction factors")
    _add_problem_flags(r)
    r.add_argument("--alpha", type=float, default=0.5)
    r.add_argument("--json", metavar="PATH", help="also write the report as JSON")
    r.set_defaults(func=cmd_rates)

    v = sub.add_parser("validate", help="statistical self-checks on a matrix")
    _add_problem_flags(v)
    v.add_argument("--draws", type=int, default=100_000)
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--json", metavar="PATH")
    v.set_defaults(func=cmd_validate)

    p = sub.add_parser("plot", help="render SVG error curves from a trace.csv")
    p.add_argument("--trace", required=True, metavar="PATH")
    p.add_argument("-o", "--out", default="plots")
    p.set_defaults(func=cmd_plot)
    return parser


_TRUE_WORDS = ("1", "true", "yes", "on")


def _inject_config(argv: list[str]) -> list[str]:
    """Expand ``--config PATH`` into flag tokens placed right after the
    subcommand, so flags given explicitly on the command line override the
    file (argparse keeps the last occurrence)."""
    if "--config" not in argv:
        return argv
    at = argv.index("--config")
    if at + 1 >= len(argv):
        raise ParseError("--config needs a file path")
    values = _read_config_file(argv[at + 1])
    rest = argv[:at] + argv[at + 2:]
    if not rest:
        raise ParseError("--config requires a subcommand")
    head = 1 if rest[0] != "generate" else 2  # keep 'generate <kind>' together
    injected = []
    for key, val in values.items():
        flag = "--" + key.replace("_", "-")
        if val.lower() in _TRUE_WORDS + ("false", "no", "off"):
            if val.lower() in _TRUE_WORDS:
                injected.append(flag)
        else:
            injected.extend([flag, val])
    return rest[:head] + injected + rest[head:]


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        argv = _inject_config(argv)
    except (OSError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, UnsupportedField, FileNotFoundError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (DegenerateMatrix, InconsistentSystem, StalledAtNonSolution) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except RdrSolveError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
