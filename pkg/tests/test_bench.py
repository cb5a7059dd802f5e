import csv
import math
import os

import numpy as np
import pytest

from lazynewton import (
    CSV_HEADER,
    ExperimentSpec,
    SolverConfig,
    emit_csv,
    gen_logsumexp,
    optimal_curve_m,
    run_cubic,
    run_experiment,
    work_curve,
)
from lazynewton.cli import main as cli_main


def small_trace(max_iters=3):
    p = gen_logsumexp(8, 4, mu=0.3, seed=15)
    cfg = SolverConfig(method="cubic", m=2, eps=1e-12, max_iters=max_iters)
    return run_cubic(p, p.norm_context(), cfg), p


class TestEmitCsv:
    def test_header_only_for_empty_trace(self, tmp_path):
        p = gen_logsumexp(8, 4, mu=0.3, seed=15)
        x_star_cfg = SolverConfig(method="cubic", m=1, eps=1e3, max_iters=5)
        tr = run_cubic(p, p.norm_context(), x_star_cfg)  # eps huge: stops at once
        path = emit_csv(tr, tmp_path / "t.csv")
        text = path.read_text()
        assert text == CSV_HEADER + "\n"

    def test_three_iterations_four_lines(self, tmp_path):
        tr, _ = small_trace(max_iters=3)
        assert len(tr.records) == 3
        path = emit_csv(tr, tmp_path / "t.csv")
        lines = path.read_text().splitlines()
        assert len(lines) == 4
        assert lines[0] == CSV_HEADER
        assert "\r" not in path.read_text()

    def test_round_trip_work_units(self, tmp_path):
        tr, p = small_trace(max_iters=6)
        path = emit_csv(tr, tmp_path / "t.csv")
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == len(tr.records)
        d = p.dim
        for row in rows:
            assert int(row["work_units"]) == int(row["n_grad"]) + d * int(row["n_hess"])
        # counters in the last row equal the oracle's final counters
        assert int(rows[-1]["n_grad"]) == p.counters.n_grad
        assert int(rows[-1]["n_hess"]) == p.counters.n_hess

    def test_lambda_column_empty_for_cubic(self, tmp_path):
        tr, _ = small_trace()
        path = emit_csv(tr, tmp_path / "t.csv")
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert all(row["lambda"] == "" for row in rows)


class TestWorkCurve:
    def test_reference_values(self):
        assert work_curve(16, 16) == pytest.approx(8.0)
        assert work_curve(1, 16) == pytest.approx(17.0)

    def test_minimized_at_d(self):
        for d in (4, 9, 16, 20, 25):
            assert optimal_curve_m(d) == d


def tiny_spec(tmp_path, **kw):
    defaults = dict(problem="logsumexp", n=12, d=6, mu=0.3, seed=5,
                    methods=["gradreg"], m_values=[1, "d"], eps=1e-7,
                    max_iters=2000, out=tmp_path / "res")
    defaults.update(kw)
    return ExperimentSpec(**defaults)


class TestRunExperiment:
    def test_sweep_outputs(self, tmp_path):
        spec = tiny_spec(tmp_path)
        result = run_experiment(spec)
        assert result.ok
        assert (tmp_path / "res" / "summary.csv").exists()
        assert (tmp_path / "res" / "logsumexp_gradreg_m1.csv").exists()
        assert (tmp_path / "res" / "logsumexp_gradreg_m6.csv").exists()
        assert result.curve_optimal_m == 6
        ms = [row.m for row in result.rows]
        assert ms == [1, 6]

    def test_m_literal_d_resolution(self, tmp_path):
        spec = tiny_spec(tmp_path, m_values=["d", 1, "d", "2"])
        assert spec.resolved_m() == [6, 1, 2]

    def test_determinism_except_wall(self, tmp_path):
        s1 = tiny_spec(tmp_path, out=tmp_path / "a")
        s2 = tiny_spec(tmp_path, out=tmp_path / "b")
        run_experiment(s1)
        run_experiment(s2)
        for name in ("logsumexp_gradreg_m1.csv", "logsumexp_gradreg_m6.csv"):
            rows_a = (tmp_path / "a" / name).read_text().splitlines()
            rows_b = (tmp_path / "b" / name).read_text().splitlines()
            assert len(rows_a) == len(rows_b)
            for ra, rb in zip(rows_a, rows_b):
                # identical except the wall_ns column (the last one)
                assert ra.rsplit(",", 1)[0] == rb.rsplit(",", 1)[0]

    def test_sweep_isolation(self, tmp_path):
        # per-run counters start fresh: the m=1 run's counters are not
        # inflated by the other runs in the sweep
        spec = tiny_spec(tmp_path)
        result = run_experiment(spec)
        by_m = {row.m: row for row in result.rows}
        assert by_m[1].n_hess == by_m[1].iterations
        assert by_m[6].n_hess == math.ceil(by_m[6].iterations / 6)

    def test_error_recorded_without_aborting(self, tmp_path):
        # cubic on a problem with unknown L and no M errors; gradreg still runs
        spec = tiny_spec(tmp_path, problem="separable", phi="double-well",
                         methods=["cubic", "adaptive-cubic"], m_values=[1],
                         M=None, M0=1.0, eps=1e-5)
        result = run_experiment(spec)
        assert not result.ok
        statuses = {row.method: row.status for row in result.rows}
        assert statuses["cubic"].startswith("error:NoLipschitzConstant")
        assert statuses["adaptive-cubic"] == "ok"
        assert (tmp_path / "res" / "summary.csv").exists()

    def test_thread_cap_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("LAZY_NEWTON_THREADS", "1")
        result = run_experiment(tiny_spec(tmp_path))
        assert result.ok


class TestCli:
    def test_full_run_exit_zero(self, tmp_path, capsys):
        rc = cli_main([
            "--problem", "logsumexp", "--n", "12", "--d", "6", "--mu", "0.3",
            "--seed", "5", "--method", "gradreg", "--m", "1", "--m", "d",
            "--eps", "1e-7", "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        out = capsys.readouterr().out
        assert "summary written" in out
        assert (tmp_path / "out" / "summary.csv").exists()

    def test_exit_two_on_run_error(self, tmp_path, capsys):
        rc = cli_main([
            "--problem", "separable", "--phi", "double-well", "--n", "8",
            "--d", "4", "--seed", "2", "--method", "cubic", "--m", "1",
            "--eps", "1e-5", "--out", str(tmp_path / "out"),
        ])
        assert rc == 2
        assert (tmp_path / "out" / "summary.csv").exists()

    def test_adaptive_methods_from_cli(self, tmp_path):
        rc = cli_main([
            "--problem", "logsumexp", "--n", "10", "--d", "5", "--mu", "0.3",
            "--seed", "3", "--method", "adaptive-gradreg", "--m", "2",
            "--M0", "1.0", "--eps", "1e-7", "--out", str(tmp_path / "out"),
        ])
        assert rc == 0
        assert (tmp_path / "out" / "logsumexp_adaptive-gradreg_m2.csv").exists()
