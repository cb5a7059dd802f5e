"""Experiment runner: sweeps methods and Hessian-update frequencies m over a
problem instance, emits one CSV trace per run plus a summary table.

The work model charges one unit per gradient call and d units per Hessian
call (work_units = n_grad + d * n_hess), so the sweep exposes the tradeoff
that makes m = d the optimal update frequency: the theoretical cost curve
sqrt(m) + d / sqrt(m) is minimized there.
"""

from __future__ import annotations

import math
import os
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import IOFailure
from .problems import (
    ProblemOracle,
    gen_logsumexp,
    gen_quadratic,
    gen_separable,
)
from .solvers import METHODS, SolverConfig, Trace, run

CSV_HEADER = ("k,phase,retry,method,m,M_used,f,grad_dual_norm,xi,step_r,"
              "lambda,n_f,n_grad,n_hess,work_units,wall_ns")

PROBLEMS = ("logsumexp", "separable", "quadratic")

THREADS_ENV = "LAZY_NEWTON_THREADS"


@dataclass
class ExperimentSpec:
    """One sweep: problem instance x methods x m values."""

    problem: str = "logsumexp"
    n: int = 50
    d: int = 20
    mu: float = 0.05
    delta: float | None = None
    seed: int = 42
    methods: list[str] = field(default_factory=lambda: ["gradreg"])
    m_values: list = field(default_factory=lambda: [1, "d"])
    eps: float = 1e-9
    max_iters: int = 10000
    M: float | None = None
    M0: float | None = None
    out: str | Path = "results"
    phi: str = "double-well"

    def validate(self) -> None:
        if self.problem not in PROBLEMS:
            raise ValueError(f"unknown problem {self.problem!r}; expected one of {PROBLEMS}")
        for meth in self.methods:
            if meth not in METHODS:
                raise ValueError(f"unknown method {meth!r}; expected one of {METHODS}")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if not self.methods:
            raise ValueError("at least one method required")
        if not self.m_values:
            raise ValueError("at least one m value required")

    def resolved_m(self) -> list[int]:
        """Resolve the literal "d" and deduplicate, preserving order."""
        out: list[int] = []
        for mv in self.m_values:
            m = self.d if (isinstance(mv, str) and mv.strip().lower() == "d") else int(mv)
            if m < 1:
                raise ValueError(f"m values must be >= 1, got {m}")
            if m not in out:
                out.append(m)
        return out

    def build_problem(self) -> ProblemOracle:
        """Fresh oracle (independent counters) for one run."""
        if self.problem == "logsumexp":
            return gen_logsumexp(self.n, self.d, self.mu, delta=self.delta, seed=self.seed)
        if self.problem == "separable":
            return gen_separable(self.n, self.d, phi=self.phi, seed=self.seed)
        return gen_quadratic(self.d, seed=self.seed)


@dataclass
class RunResult:
    method: str
    m: int
    status: str
    csv_path: Path | None
    trace: Trace | None
    error: str | None = None


@dataclass
class SummaryRow:
    problem: str
    method: str
    m: int
    status: str
    iterations: int
    phases: int
    n_f: int
    n_grad: int
    n_hess: int
    work_units: int
    wall_s: float
    final_grad: float
    theory_curve: float


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    runs: list[RunResult]
    rows: list[SummaryRow]
    summary_path: Path
    curve: dict[int, float]
    curve_optimal_m: int

    @property
    def ok(self) -> bool:
        return all(r.status == "ok" for r in self.runs)

    def work_units(self, method: str, m: int) -> int:
        for row in self.rows:
            if row.method == method and row.m == m:
                return row.work_units
        raise KeyError(f"no run for ({method}, m={m})")


def work_curve(m: int, d: int) -> float:
    """Theoretical per-accuracy cost factor sqrt(m) + d/sqrt(m)."""
    return math.sqrt(m) + d / math.sqrt(m)


def optimal_curve_m(d: int, m_max: int | None = None) -> int:
    """Integer minimizer of the cost curve (equals d)."""
    m_max = m_max or max(4 * d, 8)
    return min(range(1, m_max + 1), key=lambda m: work_curve(m, d))


def _csv_float(v) -> str:
    if v is None:
        return ""
    return repr(float(v))


def emit_csv(trace: Trace, path) -> Path:
    """Write the per-iteration telemetry using the fixed schema (LF line
    endings, plain decimal formatting)."""
    path = Path(path)
    lines = [CSV_HEADER]
    for r in trace.records:
        lines.append(",".join([
            str(r.k), str(r.phase), str(r.retry), r.method, str(r.m),
            _csv_float(r.M_used), _csv_float(r.f), _csv_float(r.grad_dual_norm),
            _csv_float(r.xi), _csv_float(r.step_r), _csv_float(r.lam),
            str(r.n_f), str(r.n_grad), str(r.n_hess), str(r.work_units),
            str(r.wall_ns),
        ]))
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write trace CSV {path}: {exc}") from exc
    return path


def _single_run(spec: ExperimentSpec, method: str, m: int, out_dir: Path) -> RunResult:
    oracle = spec.build_problem()
    ctx = oracle.norm_context()
    cfg = SolverConfig(method=method, m=m, M=spec.M,
                       M0=spec.M0 if spec.M0 is not None else 1.0,
                       eps=spec.eps, max_iters=spec.max_iters)
    csv_path = out_dir / f"{spec.problem}_{method}_m{m}.csv"
    try:
        trace = run(oracle, ctx, cfg)
        emit_csv(trace, csv_path)
        return RunResult(method, m, "ok", csv_path, trace)
    except Exception as exc:
        return RunResult(method, m, f"error:{type(exc).__name__}", None, None,
                         error="".join(traceback.format_exception_only(exc)).strip())


def _max_workers(n_runs: int) -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, min(n_runs, int(env)))
        except ValueError:
            pass
    return max(1, min(n_runs, os.cpu_count() or 1))


def run_experiment(spec: ExperimentSpec) -> ExperimentResult:
    """Execute the sweep; one CSV per (method, m), plus summary.csv.

    Individual run failures are recorded in the summary without aborting
    the rest of the sweep.
    """
    spec.validate()
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    ms = spec.resolved_m()
    jobs = [(meth, m) for meth in spec.methods for m in ms]
    results: list[RunResult] = []
    with ThreadPoolExecutor(max_workers=_max_workers(len(jobs))) as pool:
        futures = [pool.submit(_single_run, spec, meth, m, out_dir) for meth, m in jobs]
        for fut in futures:
            results.append(fut.result())

    rows = []
    for rr in results:
        tr = rr.trace
        rows.append(SummaryRow(
            problem=spec.problem, method=rr.method, m=rr.m, status=rr.status,
            iterations=tr.iterations() if tr else 0,
            phases=tr.phases if tr else 0,
            n_f=tr.n_f if tr else 0,
            n_grad=tr.n_grad if tr else 0,
            n_hess=tr.n_hess if tr else 0,
            work_units=(tr.n_grad + spec.d * tr.n_hess) if tr else 0,
            wall_s=tr.wall_ns / 1e9 if tr else 0.0,
            final_grad=(tr.records[-1].grad_dual_norm if tr and tr.records
                        else (tr.grad0 if tr else math.nan)),
            theory_curve=work_curve(rr.m, spec.d),
        ))

    curve = {m: work_curve(m, spec.d) for m in ms}
    summary_path = out_dir / "summary.csv"
    _write_summary(summary_path, rows)
    return ExperimentResult(spec=spec, runs=results, rows=rows,
                            summary_path=summary_path, curve=curve,
                            curve_optimal_m=optimal_curve_m(spec.d, max(ms + [spec.d]) * 2))


def _write_summary(path: Path, rows: list[SummaryRow]) -> None:
    header = ("problem,method,m,status,iterations,phases,n_f,n_grad,n_hess,"
              "work_units,wall_s,final_grad,theory_curve")
    lines = [header]
    for r in rows:
        lines.append(",".join([
            r.problem, r.method, str(r.m), r.status, str(r.iterations),
            str(r.phases), str(r.n_f), str(r.n_grad), str(r.n_hess),
            str(r.work_units), repr(r.wall_s), repr(r.final_grad),
            repr(r.theory_curve),
        ]))
    try:
        with open(path, "w", encoding="ascii", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise IOFailure(f"cannot write summary {path}: {exc}") from exc


def format_summary(result: ExperimentResult) -> str:
    """Plain-text table for the console."""
    cols = ["method", "m", "status", "iters", "phases", "n_grad", "n_hess",
            "work", "wall_s", "final_grad", "curve"]
    table = [cols]
    for r in result.rows:
        table.append([r.method, str(r.m), r.status, str(r.iterations),
                      str(r.phases), str(r.n_grad), str(r.n_hess),
                      str(r.work_units), f"{r.wall_s:.3f}",
                      f"{r.final_grad:.3e}", f"{r.theory_curve:.3f}"])
    widths = [max(len(row[i]) for row in table) for i in range(len(cols))]
    out = []
    for row in table:
        out.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    out.append(f"theory curve sqrt(m) + d/sqrt(m) minimized at m = "
               f"{result.curve_optimal_m} (d = {result.spec.d})")
    return "\n".join(out)
