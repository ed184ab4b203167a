import csv
import json
import statistics

import numpy as np
import pytest

from rdrsolve import SolveOptions, load_matrix_market
from rdrsolve.bench import (
    ExperimentConfig,
    read_trace_csv,
    run_experiment,
    summarize,
    write_summary_csv,
    write_trace_csv,
)
from rdrsolve.cli import main
from rdrsolve.problems import spectral_problem
from rdrsolve.validate import validate_matrix


@pytest.fixture
def small_problem():
    return spectral_problem(30, 12, 6, 5.0, 1.0, seed=21)


def small_config(**kw):
    defaults = dict(
        methods=[SolveOptions(method="rdr"), SolveOptions(method="prdr-ii"),
                 SolveOptions(method="amprdr-ii")],
        trials=4, base_seed=100, rse_tol=1e-12, trace_stride=20, jobs=2,
    )
    defaults.update(kw)
    return ExperimentConfig(**defaults)


class TestRunExperiment:
    def test_records_and_rows(self, small_problem):
        result = run_experiment(small_problem, small_config())
        assert len(result.records) == 12
        assert all(r.terminated == "converged" for r in result.records)
        assert all(r.final_rse <= 1e-12 for r in result.records)
        keys = [(row[0], row[1], row[2]) for row in result.trace_rows]
        assert keys == sorted(keys)

    def test_summary_matches_recomputation(self, small_problem, tmp_path):
        result = run_experiment(small_problem, small_config())
        summaries = summarize(result.records)
        trace_path = tmp_path / "trace.csv"
        write_trace_csv(trace_path, result.trace_rows)
        rows = read_trace_csv(trace_path)
        for s in summaries:
            finals = {}
            for method, trial, it, _rse, _sec in rows:
                if method == s["method"]:
                    finals[trial] = max(it, finals.get(trial, 0))
            assert statistics.median(finals.values()) == pytest.approx(
                s["median_iters"], abs=1e-12)
            assert statistics.fmean(finals.values()) == pytest.approx(
                s["mean_iters"], abs=1e-12)

    def test_determinism_bitwise(self, small_problem, tmp_path):
        cfg = small_config(timing="none")
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_trace_csv(a, run_experiment(small_problem, cfg).trace_rows)
        write_trace_csv(b, run_experiment(small_problem, cfg).trace_rows)
        assert a.read_bytes() == b.read_bytes()

    def test_trial_seeds_differ(self, small_problem):
        result = run_experiment(small_problem, small_config())
        by_trial = {}
        for r in result.records:
            if r.method == "rdr":
                by_trial[r.trial] = r.iterations
        assert len(set(by_trial.values())) > 1  # different seeds, different runs

    def test_preprocess_reported(self, small_problem):
        result = run_experiment(small_problem, small_config())
        assert "volume" in result.preprocess_seconds
        assert result.preprocess_seconds["volume"] >= 0.0

    def test_csv_headers(self, small_problem, tmp_path):
        result = run_experiment(small_problem, small_config())
        tp, sp = tmp_path / "trace.csv", tmp_path / "summary.csv"
        write_trace_csv(tp, result.trace_rows)
        write_summary_csv(sp, summarize(result.records))
        with open(tp) as f:
            assert next(csv.reader(f)) == ["method", "trial", "iteration", "rse", "seconds"]
        with open(sp) as f:
            assert next(csv.reader(f)) == ["method", "median_iters", "mean_iters",
                                           "mean_seconds", "success_rate"]

    def test_converged_trials_meet_tolerance(self, small_problem, tmp_path):
        result = run_experiment(small_problem, small_config())
        tp = tmp_path / "trace.csv"
        write_trace_csv(tp, result.trace_rows)
        rows = read_trace_csv(tp)
        for rec in result.records:
            if rec.terminated != "converged":
                continue
            final = max((r for r in rows if r[0] == rec.method and r[1] == rec.trial),
                        key=lambda r: r[2])
            assert final[3] <= 1e-12


class TestValidate:
    def test_random_matrix_passes(self, rng):
        A = rng.standard_normal((10, 5))
        results = validate_matrix(A, draws=30_000, seed=1)
        assert all(r["status"] == "pass" for r in results), results

    def test_rank_one_skipped(self):
        A = np.outer([1.0, 2.0, 3.0], [4.0, 5.0])
        results = validate_matrix(A)
        assert all(r["status"] == "skipped" for r in results)

    def test_distortion_detected(self, rng):
        A = rng.standard_normal((10, 5))
        results = validate_matrix(A, draws=30_000, seed=1, distort=0.05)
        assert any(r["status"] == "fail" for r in results if "chi-square" in r["check"])


class TestCli:
    def test_generate_roundtrip(self, tmp_path, capsys):
        out = tmp_path / "A.mtx"
        rc = main(["generate", "spectral", "--m", "30", "--n", "12", "--r", "5",
                   "--sigma1", "40", "--delta", "2", "--seed", "7", "-o", str(out)])
        assert rc == 0
        A = load_matrix_market(out)
        s = np.linalg.svd(A, compute_uv=False)
        assert s[0] == pytest.approx(40.0, rel=1e-10)
        assert s[4] == pytest.approx(2.0, rel=1e-9)
        meta = json.loads((tmp_path / "A.mtx.meta.json").read_text())
        assert meta["kind"] == "spectral" and meta["seed"] == 7

    def test_generate_uniform_range(self, tmp_path):
        out = tmp_path / "U.mtx"
        assert main(["generate", "uniform", "--m", "20", "--n", "8", "--t", "0.5",
                     "--seed", "1", "-o", str(out)]) == 0
        A = load_matrix_market(out)
        assert A.min() >= 0.5 and A.max() < 1.0

    def test_generate_missing_flag_usage_error(self):
        with pytest.raises(SystemExit) as e:
            main(["generate", "spectral", "--n", "12", "--r", "5", "--sigma1", "4"])
        assert e.value.code == 2

    def test_bench_and_plot(self, tmp_path, capsys):
        outdir = tmp_path / "bench"
        rc = main(["bench", "--spectral", "30", "12", "6", "5", "1",
                   "--methods", "rdr,prdr-i,amprdr-ii", "--trials", "3",
                   "--seed", "3", "--trace-stride", "25", "-o", str(outdir)])
        assert rc == 0
        trace = outdir / "trace.csv"
        assert trace.exists() and (outdir / "summary.csv").exists()
        rc = main(["plot", "--trace", str(trace), "-o", str(tmp_path / "plots")])
        assert rc == 0
        for name in ("rse_vs_iteration.svg", "rse_vs_seconds.svg"):
            svg = (tmp_path / "plots" / name).read_text()
            assert svg.count("<polyline") == 3
            for meth in ("rdr", "prdr-i", "amprdr-ii"):
                assert f">{meth}</text>" in svg

    def test_bench_determinism_cli(self, tmp_path):
        args = ["bench", "--spectral", "25", "10", "5", "4", "1", "--methods",
                "rdr,amprdr-i", "--trials", "2", "--seed", "9", "--no-timing"]
        assert main(args + ["-o", str(tmp_path / "r1")]) == 0
        assert main(args + ["-o", str(tmp_path / "r2")]) == 0
        assert (tmp_path / "r1/trace.csv").read_bytes() == (tmp_path / "r2/trace.csv").read_bytes()
        assert (tmp_path / "r1/summary.csv").read_bytes() == (tmp_path / "r2/summary.csv").read_bytes()

    def test_rates_identity_values(self, tmp_path, capsys):
        mtx = tmp_path / "I.mtx"
        from rdrsolve import write_matrix_market
        write_matrix_market(mtx, np.eye(10))
        jpath = tmp_path / "rates.json"
        rc = main(["rates", "--matrix", str(mtx), "--json", str(jpath)])
        assert rc == 0
        payload = json.loads(jpath.read_text())
        assert set(payload) == {"delta", "M_pd", "N_pd", "rho_rdr", "rho_prdr1",
                                "rho_prdr2", "alpha"}
        assert payload["rho_prdr1"] == pytest.approx(0.8, abs=1e-12)
        assert payload["rho_prdr2"] == pytest.approx(0.8, abs=1e-12)
        assert payload["rho_rdr"] == pytest.approx(0.82, abs=1e-12)
        assert payload["M_pd"] and payload["N_pd"]

    def test_rates_rank_one_exit_code(self, tmp_path, capsys):
        mtx = tmp_path / "r1.mtx"
        from rdrsolve import write_matrix_market
        write_matrix_market(mtx, np.outer([1.0, 2.0], [3.0, 4.0, 5.0]))
        assert main(["rates", "--matrix", str(mtx)]) == 4

    def test_plot_missing_trace_exit_code(self, tmp_path):
        assert main(["plot", "--trace", str(tmp_path / "nope.csv")]) == 3

    def test_plot_empty_trace_exit_code(self, tmp_path):
        f = tmp_path / "trace.csv"
        f.write_text("method,trial,iteration,rse,seconds\n")
        assert main(["plot", "--trace", str(f)]) == 3

    def test_validate_cli(self, tmp_path, capsys):
        mtx = tmp_path / "V.mtx"
        from rdrsolve import write_matrix_market
        rng = np.random.default_rng(5)
        write_matrix_market(mtx, rng.standard_normal((8, 4)))
        rc = main(["validate", "--matrix", str(mtx), "--draws", "20000",
                   "--json", str(tmp_path / "v.json")])
        assert rc == 0
        payload = json.loads((tmp_path / "v.json").read_text())
        assert all(item["status"] == "pass" for item in payload)

    def test_config_file_defaults_and_override(self, tmp_path):
        cfg = tmp_path / "bench.cfg"
        cfg.write_text("trials = 2\nseed = 5\nmethods = rdr\ntrace-stride = 50\n")
        out1 = tmp_path / "c1"
        rc = main(["--config", str(cfg), "bench", "--spectral", "25", "10", "5", "4", "1",
                   "--no-timing", "-o", str(out1)])
        assert rc == 0
        rows = read_trace_csv(out1 / "trace.csv")
        assert {r[0] for r in rows} == {"rdr"}
        assert max(r[1] for r in rows) == 1  # trials = 2 from config
        # explicit flag wins over the config value
        out2 = tmp_path / "c2"
        rc = main(["--config", str(cfg), "bench", "--spectral", "25", "10", "5", "4", "1",
                   "--trials", "3", "--no-timing", "-o", str(out2)])
        assert rc == 0
        rows = read_trace_csv(out2 / "trace.csv")
        assert max(r[1] for r in rows) == 2
