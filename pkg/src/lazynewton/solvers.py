"""Outer Newton-type loops that reuse a snapshot Hessian for m steps.

Four methods share the same phase schedule: the Hessian is factorized at
iterate pi(k) = k - k mod m and reused until the next multiple of m.

* ``cubic``            fixed M, cubically regularized steps (default M = 6 m L)
* ``gradreg``          fixed M, quadratic damping lambda = sqrt(M ||grad||_*)
                       for convex problems (default M = 3 m L)
* ``adaptive-cubic``   per-phase doubling of M until a sufficient-decrease
                       test passes, then quartering
* ``adaptive-gradreg`` same search with gradient-regularized inner steps

Every iteration is recorded (including rejected adaptive retries, flagged
by a retry index) with objective value, dual gradient norm, the
second-order stationarity measure xi, and cumulative oracle counters.
Telemetry values (f, xi at each iterate) are computed outside the counted
oracle interface so the counters reflect only what the algorithm pays for.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from .cubic import cubic_step
from .errors import AdaptiveDivergence, NoLipschitzConstant, NonConvexWarning
from .linalg import NormContext, factorize_snapshot, solve_shifted, xi_of_matrix
from .problems import ProblemOracle

METHODS = ("cubic", "gradreg", "adaptive-cubic", "adaptive-gradreg")
ADAPTIVE_M_CAP = 1e30
NONCONVEX_EIG_TOL = -1e-8


def phase_start(k: int, m: int) -> int:
    """Highest multiple of m that is <= k: the index of the iterate whose
    Hessian the k-th step uses."""
    if k < 0 or m < 1:
        raise ValueError("need k >= 0 and m >= 1")
    return k - k % m


@dataclass
class SolverConfig:
    """Settings shared by all four methods.

    M is the fixed regularization constant; when None it defaults to 6*m*L
    (cubic) or 3*m*L (gradreg) using the known Hessian Lipschitz constant L
    from the config or the oracle.  M0 is the adaptive initial guess.
    """

    method: str = "cubic"
    m: int = 1
    M: float | None = None
    M0: float = 1.0
    eps: float = 1e-8
    max_iters: int = 10000
    L: float | None = None
    seed: int | None = None  # seeds a random start when x0 is not given
    allow_nonconvex: bool = False
    x0: np.ndarray | None = None

    def validate(self) -> None:
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.m < 1:
            raise ValueError("phase length m must be >= 1")
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.method in ("cubic", "gradreg") and self.M is not None and self.M <= 0:
            raise ValueError("fixed regularization M must be positive")
        if self.method.startswith("adaptive") and self.M0 <= 0:
            raise ValueError("adaptive initial guess M0 must be positive")


@dataclass
class IterationRecord:
    """Telemetry for one performed step (accepted or an adaptive retry)."""

    k: int
    phase: int
    retry: int
    method: str
    m: int
    M_used: float
    f: float
    grad_dual_norm: float
    xi: float
    step_r: float
    lam: float | None
    n_f: int
    n_grad: int
    n_hess: int
    work_units: int
    wall_ns: int


@dataclass
class Trace:
    """Full record of one solver run."""

    method: str
    m: int
    d: int
    eps: float
    M: float | None
    M0: float | None
    records: list[IterationRecord] = field(default_factory=list)
    f0: float = math.nan
    grad0: float = math.nan
    xi0: float = math.nan
    points: list[np.ndarray] = field(default_factory=list)
    snapshot_ks: list[int] = field(default_factory=list)
    phases: int = 0
    tries_per_phase: list[int] = field(default_factory=list)
    M_next: float | None = None
    converged: bool = False
    reason: str = ""
    n_f: int = 0
    n_grad: int = 0
    n_hess: int = 0
    wall_ns: int = 0
    nonconvex_detected: bool = False

    def accepted_records(self) -> list[IterationRecord]:
        """Records along the accepted trajectory (last try of each phase)."""
        if not self.method.startswith("adaptive"):
            return list(self.records)
        last_try = {t: tries - 1 for t, tries in enumerate(self.tries_per_phase)}
        return [r for r in self.records if r.retry == last_try.get(r.phase, 0)]

    def iterations(self) -> int:
        """Number of accepted iterations (excluding rejected retries)."""
        return len(self.accepted_records())


class _RunState:
    """Bookkeeping shared by the four loops."""

    def __init__(self, oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig):
        self.oracle = oracle
        self.ctx = ctx
        self.cfg = cfg
        self.t0 = time.perf_counter_ns()
        if cfg.x0 is not None:
            x0 = np.asarray(cfg.x0, dtype=float)
        elif cfg.seed is not None:
            x0 = np.random.default_rng(cfg.seed).uniform(-1.0, 1.0, oracle.dim)
        else:
            x0 = np.zeros(oracle.dim)
        self.x = x0.copy()
        self.trace = Trace(method=cfg.method, m=cfg.m, d=oracle.dim, eps=cfg.eps,
                           M=cfg.M, M0=cfg.M0 if cfg.method.startswith("adaptive") else None)
        self.trace.f0 = oracle._value(x0)
        self.trace.xi0 = xi_of_matrix(ctx, oracle._hess(x0))
        self.trace.points.append(x0.copy())

    def elapsed_ns(self) -> int:
        return time.perf_counter_ns() - self.t0

    def record(self, k: int, phase: int, retry: int, M_used: float,
               x_new: np.ndarray, grad_dual: float, step_r: float,
               lam: float | None) -> None:
        oc = self.oracle.counters
        d = self.oracle.dim
        rec = IterationRecord(
            k=k, phase=phase, retry=retry, method=self.cfg.method, m=self.cfg.m,
            M_used=M_used,
            f=self.oracle._value(x_new),
            grad_dual_norm=grad_dual,
            xi=xi_of_matrix(self.ctx, self.oracle._hess(x_new)),
            step_r=step_r, lam=lam,
            n_f=oc.n_f, n_grad=oc.n_grad, n_hess=oc.n_hess,
            work_units=oc.n_grad + d * oc.n_hess,
            wall_ns=self.elapsed_ns(),
        )
        self.trace.records.append(rec)

    def finish(self, converged: bool, reason: str) -> Trace:
        tr = self.trace
        tr.converged = converged
        tr.reason = reason
        oc = self.oracle.counters
        tr.n_f, tr.n_grad, tr.n_hess = oc.n_f, oc.n_grad, oc.n_hess
        tr.wall_ns = self.elapsed_ns()
        return tr


def _resolve_fixed_M(cfg: SolverConfig, oracle: ProblemOracle, factor: float) -> float:
    if cfg.M is not None:
        return float(cfg.M)
    L = cfg.L if cfg.L is not None else oracle.lipschitz
    if L is None:
        raise NoLipschitzConstant(
            "no regularization constant: set M explicitly, supply a Lipschitz "
            "constant, or use an adaptive method"
        )
    M = factor * cfg.m * L
    if M <= 0:
        raise ValueError(
            f"derived M = {factor:g}*m*L = {M:g} is not positive; set M explicitly"
        )
    return M


def _check_convex(oracle: ProblemOracle, cfg: SolverConfig) -> None:
    if not oracle.convex and not cfg.allow_nonconvex:
        raise ValueError(
            "gradient regularization assumes a convex oracle; "
            "set allow_nonconvex=True to override"
        )


def _snapshot(state: _RunState, k: int):
    snap = factorize_snapshot(state.ctx, state.oracle.hess(state.x), state.x)
    state.trace.snapshot_ks.append(k)
    return snap


def _warn_nonconvex(state: _RunState, snap) -> None:
    if snap.eigvals[0] < NONCONVEX_EIG_TOL and not state.trace.nonconvex_detected:
        state.trace.nonconvex_detected = True
        warnings.warn(
            f"snapshot Hessian has negative eigenvalue {snap.eigvals[0]:.3e}; "
            "gradient regularization guarantees do not apply",
            NonConvexWarning, stacklevel=3)


# ---------------------------------------------------------------------------
# fixed-M methods
# ---------------------------------------------------------------------------


def run_cubic(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig) -> Trace:
    """Cubic regularization with lazy Hessian updates (fixed M)."""
    cfg.validate()
    M = _resolve_fixed_M(cfg, oracle, factor=6.0)
    state = _RunState(oracle, ctx, cfg)
    state.trace.M = M
    g = oracle.grad(state.x)
    gn = ctx.dual_norm(g)
    state.trace.grad0 = gn
    snap = None
    k = 0
    while k < cfg.max_iters:
        if gn <= cfg.eps:
            return state.finish(True, "gradient below eps")
        if k % cfg.m == 0:
            snap = _snapshot(state, k)
        res = cubic_step(oracle, ctx, snap, state.x, M, grad=g)
        state.x = res.T
        g = oracle.grad(state.x)
        gn = ctx.dual_norm(g)
        k += 1
        state.trace.points.append(state.x.copy())
        state.record(k=k, phase=(k - 1) // cfg.m, retry=0, M_used=M,
                     x_new=state.x, grad_dual=gn, step_r=res.r, lam=None)
        state.trace.phases = (k + cfg.m - 1) // cfg.m
    converged = gn <= cfg.eps
    return state.finish(converged, "gradient below eps" if converged else "max_iters reached")


def run_gradreg(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig) -> Trace:
    """Gradient-regularized Newton with lazy Hessian updates (fixed M):
    lambda_k = sqrt(M ||grad f(x_k)||_*), step solves (H + lambda_k B) h = -grad."""
    cfg.validate()
    _check_convex(oracle, cfg)
    M = _resolve_fixed_M(cfg, oracle, factor=3.0)
    state = _RunState(oracle, ctx, cfg)
    state.trace.M = M
    g = oracle.grad(state.x)
    gn = ctx.dual_norm(g)
    state.trace.grad0 = gn
    snap = None
    k = 0
    while k < cfg.max_iters:
        if gn <= cfg.eps:
            return state.finish(True, "gradient below eps")
        if k % cfg.m == 0:
            snap = _snapshot(state, k)
            _warn_nonconvex(state, snap)
        lam = math.sqrt(M * gn)
        h = solve_shifted(snap, lam, g)
        state.x = state.x + h
        g = oracle.grad(state.x)
        gn = ctx.dual_norm(g)
        k += 1
        state.trace.points.append(state.x.copy())
        state.record(k=k, phase=(k - 1) // cfg.m, retry=0, M_used=M,
                     x_new=state.x, grad_dual=gn, step_r=ctx.primal_norm(h), lam=lam)
        state.trace.phases = (k + cfg.m - 1) // cfg.m
    converged = gn <= cfg.eps
    return state.finish(converged, "gradient below eps" if converged else "max_iters reached")


# ---------------------------------------------------------------------------
# adaptive methods
# ---------------------------------------------------------------------------


def _adaptive_loop(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig,
                   gradreg: bool) -> Trace:
    """Shared doubling/quartering search.

    Per phase: one Hessian factorization; the m inner steps restart from
    the phase snapshot iterate on every doubling of M_t with fresh
    gradients at the new inner points (the phase-start gradient and
    objective value are cached, so each try costs exactly m gradient
    calls).  After a successful try, M_{t+1} = M_t / 4.
    """
    cfg.validate()
    if gradreg:
        _check_convex(oracle, cfg)
    state = _RunState(oracle, ctx, cfg)
    m = cfg.m
    x = state.x
    g = oracle.grad(x)
    gn = ctx.dual_norm(g)
    state.trace.grad0 = gn
    M_t = float(cfg.M0)
    t = 0
    k = 0
    while k < cfg.max_iters:
        if gn <= cfg.eps:
            return state.finish(True, "gradient below eps")
        snap = _snapshot(state, k)
        if gradreg:
            _warn_nonconvex(state, snap)
        f_phase = oracle.f(x)
        tries = 0
        while True:
            M_t *= 2.0
            tries += 1
            if M_t > ADAPTIVE_M_CAP:
                raise AdaptiveDivergence(
                    f"regularization exceeded {ADAPTIVE_M_CAP:g}; sufficient "
                    "decrease never triggered (inconsistent oracle?)"
                )
            xx, gg, gnn = x, g, gn
            new_pts, grad_norms, lams = [], [], []
            for i in range(1, m + 1):
                if gradreg:
                    lam = math.sqrt(M_t * gnn)
                    h = solve_shifted(snap, lam, gg)
                    xx = xx + h
                    step_r = ctx.primal_norm(h)
                    lams.append(lam)
                else:
                    res = cubic_step(oracle, ctx, snap, xx, M_t, grad=gg)
                    xx = res.T
                    step_r = res.r
                    lam = None
                gg = oracle.grad(xx)
                gnn = ctx.dual_norm(gg)
                new_pts.append(xx)
                grad_norms.append(gnn)
                state.record(k=k + i, phase=t, retry=tries - 1, M_used=M_t,
                             x_new=xx, grad_dual=gnn, step_r=step_r, lam=lam)
            f_end = oracle.f(xx)
            if gradreg:
                required = sum(gn2**2 / lam for gn2, lam in zip(grad_norms, lams))
            else:
                required = sum(gn2**1.5 for gn2 in grad_norms) / math.sqrt(M_t)
            if f_phase - f_end >= required:
                break
            if max(grad_norms) <= cfg.eps:
                break  # stationary to target accuracy; no decrease left to test
        x, g, gn = xx, gg, gnn
        state.x = x
        state.trace.points.extend(p.copy() for p in new_pts)
        state.trace.tries_per_phase.append(tries)
        M_t *= 0.25
        t += 1
        k += m
        state.trace.phases = t
        state.trace.M_next = M_t
    converged = gn <= cfg.eps
    return state.finish(converged, "gradient below eps" if converged else "max_iters reached")


def run_adaptive_cubic(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig) -> Trace:
    """Adaptive cubic regularization: double M_t until
    f(x_tm) - f(x_tm+m) >= (1/sqrt(M_t)) sum_i ||grad f(x_tm+i)||_*^{3/2},
    then quarter it for the next phase."""
    return _adaptive_loop(oracle, ctx, cfg, gradreg=False)


def run_adaptive_gradreg(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig) -> Trace:
    """Adaptive gradient regularization: the sufficient-decrease test is
    f(x_tm) - f(x_tm+m) >= sum_i ||grad f(x_tm+i)||_*^2 / lambda_{tm+i-1}."""
    return _adaptive_loop(oracle, ctx, cfg, gradreg=True)


_RUNNERS = {
    "cubic": run_cubic,
    "gradreg": run_gradreg,
    "adaptive-cubic": run_adaptive_cubic,
    "adaptive-gradreg": run_adaptive_gradreg,
}


def run(oracle: ProblemOracle, ctx: NormContext, cfg: SolverConfig) -> Trace:
    """Dispatch to the configured method."""
    cfg.validate()
    return _RUNNERS[cfg.method](oracle, ctx, cfg)


# ---------------------------------------------------------------------------
# reporting
# ---------------------------------------------------------------------------


@dataclass
class StationarityReport:
    min_grad_dual_norm: float
    min_xi: float
    bound: float
    satisfied: bool


def stationarity_report(trace: Trace, mL: float) -> StationarityReport:
    """Second-order stationarity summary for a finished run.

    Checks min_k xi(x_k) against the 2^(5/3) * 9 * sqrt(m L eps) level that
    a fixed-M cubic run guarantees at gradient accuracy eps.
    """
    recs = trace.accepted_records()
    if not recs:
        raise ValueError("trace has no completed iterations")
    min_g = min(r.grad_dual_norm for r in recs)
    min_xi = min(r.xi for r in recs)
    bound = 2.0 ** (5.0 / 3.0) * 9.0 * math.sqrt(mL * trace.eps)
    return StationarityReport(min_g, min_xi, bound, min_xi <= bound)
