"""Problem oracles: objective/gradient/Hessian with evaluation counting.

Built-in problems: the smoothed-max (log-sum-exp) benchmark, separable
objectives f(x) = (1/n) sum_i phi(<a_i, x>), and plain quadratics.  Each
problem also supplies its natural norm matrix B.  A finite-difference
wrapper provides Hessians for gradient-only oracles at a cost of d+1
gradient calls, which is exactly the d:1 Hessian-to-gradient work ratio the
benchmark assumes.
"""

from __future__ import annotations

import threading
from collections import namedtuple
from pathlib import Path

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DimensionMismatch, IOFailure
from .linalg import NormContext, make_norm_context

Counters = namedtuple("Counters", ["n_f", "n_grad", "n_hess"])


class ProblemOracle:
    """Evaluation interface for f, grad f, hess f with thread-safe counters.

    Subclasses implement ``_value``, ``_grad`` and ``_hess``; the public
    ``f``/``grad``/``hess`` wrappers count.  Telemetry code may call the
    underscore methods directly so that counters reflect only the work an
    algorithm actually pays for.

    Metadata: ``lipschitz`` is a known Hessian Lipschitz constant in the B
    geometry (or None), ``strong_convexity`` a known mu with
    hess f >= mu * B (or None), ``convex`` a flag.
    """

    kind = "generic"

    def __init__(self, dim: int, *, lipschitz: float | None = None,
                 strong_convexity: float | None = None, convex: bool = False):
        self.dim = int(dim)
        self.lipschitz = lipschitz
        self.strong_convexity = strong_convexity
        self.convex = convex
        self._lock = threading.Lock()
        self._n_f = 0
        self._n_grad = 0
        self._n_hess = 0
        self._ctx: NormContext | None = None

    # -- counted evaluation interface ------------------------------------

    def f(self, x: np.ndarray) -> float:
        with self._lock:
            self._n_f += 1
        return self._value(self._vec(x))

    def grad(self, x: np.ndarray) -> np.ndarray:
        with self._lock:
            self._n_grad += 1
        return self._grad(self._vec(x))

    def hess(self, x: np.ndarray) -> np.ndarray:
        with self._lock:
            self._n_hess += 1
        return self._hess(self._vec(x))

    @property
    def counters(self) -> Counters:
        with self._lock:
            return Counters(self._n_f, self._n_grad, self._n_hess)

    def reset_counters(self) -> None:
        with self._lock:
            self._n_f = self._n_grad = self._n_hess = 0

    # -- geometry ---------------------------------------------------------

    def norm_matrix(self) -> np.ndarray:
        return np.eye(self.dim)

    def norm_context(self) -> NormContext:
        if self._ctx is None:
            self._ctx = make_norm_context(self.norm_matrix())
        return self._ctx

    # -- to be implemented by subclasses ----------------------------------

    def _value(self, x: np.ndarray) -> float:
        raise NotImplementedError

    def _grad(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _hess(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _vec(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected vector of length {self.dim}, got shape {x.shape}")
        return x


# ---------------------------------------------------------------------------
# log-sum-exp (smoothed maximum)
# ---------------------------------------------------------------------------


class LogSumExpProblem(ProblemOracle):
    """f(x) = mu * ln sum_i exp((<a_i, x> - b_i) / mu).

    Convex, with Hessian Lipschitz constant L = 2 / mu^2 in the geometry of
    B = A^T A + delta*I.  Evaluation subtracts the max before exponentiating
    and renormalizes the softmax weights to sum exactly to 1, so it is
    stable down to small mu.
    """

    kind = "logsumexp"

    def __init__(self, A: np.ndarray, b: np.ndarray, mu: float,
                 delta: float | None = None, seed: int | None = None):
        A = np.asarray(A, dtype=float)
        b = np.asarray(b, dtype=float)
        if A.ndim != 2 or b.shape != (A.shape[0],):
            raise DimensionMismatch(f"A {A.shape} and b {b.shape} do not align")
        if mu <= 0:
            raise ValueError("mu must be positive")
        super().__init__(A.shape[1], lipschitz=2.0 / mu**2, convex=True)
        self.A = A
        self.b = b
        self.n = A.shape[0]
        self.mu = float(mu)
        self.gram = A.T @ A
        if delta is None:
            delta = default_delta(A)
        if delta <= 0:
            raise ValueError("delta must be positive")
        self.delta = float(delta)
        self.seed = seed

    def norm_matrix(self) -> np.ndarray:
        return self.gram + self.delta * np.eye(self.dim)

    def _weights(self, x: np.ndarray):
        t = (self.A @ x - self.b) / self.mu
        tmax = float(np.max(t))
        e = np.exp(t - tmax)
        s = float(e.sum())
        w = e / s
        w /= w.sum()
        value = self.mu * (tmax + np.log(s))
        return value, w

    def _value(self, x):
        return self._weights(x)[0]

    def _grad(self, x):
        _, w = self._weights(x)
        return self.A.T @ w

    def _hess(self, x):
        _, w = self._weights(x)
        g = self.A.T @ w
        H = (self.A.T * w) @ self.A - np.outer(g, g)
        return 0.5 * (H + H.T) / self.mu


def logsumexp_value_grad_hess(p: LogSumExpProblem, x: np.ndarray):
    """Evaluate (f, grad, hess) in one pass (uncounted)."""
    x = p._vec(x)
    value, w = p._weights(x)
    g = p.A.T @ w
    H = ((p.A.T * w) @ p.A - np.outer(g, g))
    return value, g, 0.5 * (H + H.T) / p.mu


def default_delta(A: np.ndarray) -> float:
    """Perturbation for B = A^T A + delta*I, scaled to the data:
    1e-6 * trace(A^T A) / d."""
    A = np.asarray(A, dtype=float)
    d = A.shape[1]
    tr = float(np.sum(A * A))
    return 1e-6 * tr / d if tr > 0 else 1e-6


def gen_logsumexp(n: int, d: int, mu: float, delta: float | None = None,
                  seed: int = 0) -> LogSumExpProblem:
    """Random instance with A, b uniform on [-1, 1].

    The stream is PCG64 (numpy ``default_rng(seed)``); A is drawn first,
    row-major, then b, so instances are reproducible bit-for-bit.
    """
    if n < 1 or d < 1:
        raise ValueError("n and d must be >= 1")
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(n, d))
    b = rng.uniform(-1.0, 1.0, size=n)
    return LogSumExpProblem(A, b, mu, delta=delta, seed=seed)


# ---------------------------------------------------------------------------
# separable objectives
# ---------------------------------------------------------------------------


class ScalarLink:
    """Univariate phi with two derivatives, vectorized over numpy arrays."""

    def __init__(self, name, value, d1, d2):
        self.name = name
        self.value = value
        self.d1 = d1
        self.d2 = d2


SCALAR_LINKS = {
    "square": ScalarLink("square", lambda t: 0.5 * t**2, lambda t: t,
                         lambda t: np.ones_like(t)),
    "double-well": ScalarLink("double-well", lambda t: 0.25 * t**4 - 0.5 * t**2,
                              lambda t: t**3 - t, lambda t: 3.0 * t**2 - 1.0),
}


class SeparableProblem(ProblemOracle):
    """f(x) = (1/n) sum_i phi(<a_i, x>) for a data matrix A with rows a_i.

    grad f = A^T s(x) and hess f = A^T Q(x) A with s_i = phi'(<a_i,x>)/n and
    Q = diag(phi''(<a_i,x>)/n).  The norm matrix is either the identity or
    the Gram matrix A^T A + delta*I.
    """

    kind = "separable"

    def __init__(self, A: np.ndarray, phi: ScalarLink | str,
                 b_mode: str = "gram", delta: float | None = None,
                 seed: int | None = None):
        A = np.asarray(A, dtype=float)
        if isinstance(phi, str):
            phi = SCALAR_LINKS[phi]
        if b_mode not in ("gram", "identity"):
            raise ValueError(f"unknown b_mode {b_mode!r}")
        convex = phi.name == "square"
        super().__init__(A.shape[1], convex=convex)
        self.A = A
        self.n = A.shape[0]
        self.phi = phi
        self.b_mode = b_mode
        self.delta = float(delta) if delta is not None else default_delta(A)
        self.seed = seed

    def norm_matrix(self) -> np.ndarray:
        if self.b_mode == "identity":
            return np.eye(self.dim)
        return self.A.T @ self.A + self.delta * np.eye(self.dim)

    def _value(self, x):
        return float(np.sum(self.phi.value(self.A @ x)) / self.n)

    def _grad(self, x):
        s = self.phi.d1(self.A @ x) / self.n
        return self.A.T @ s

    def _hess(self, x):
        q = self.phi.d2(self.A @ x) / self.n
        H = (self.A.T * q) @ self.A
        return 0.5 * (H + H.T)


def gen_separable(n: int, d: int, phi: str = "double-well",
                  b_mode: str = "gram", seed: int = 0) -> SeparableProblem:
    """Random data uniform on [-1, 1]; same stream convention as
    ``gen_logsumexp``."""
    rng = np.random.default_rng(seed)
    A = rng.uniform(-1.0, 1.0, size=(n, d))
    return SeparableProblem(A, phi, b_mode=b_mode, seed=seed)


# ---------------------------------------------------------------------------
# quadratics
# ---------------------------------------------------------------------------


class QuadraticProblem(ProblemOracle):
    """f(x) = 0.5 x^T Q x - <c, x>.  Hessian Lipschitz constant is 0."""

    kind = "quadratic"

    def __init__(self, Q: np.ndarray, c: np.ndarray | None = None,
                 B: np.ndarray | None = None, seed: int | None = None):
        Q = np.asarray(Q, dtype=float)
        Q = 0.5 * (Q + Q.T)
        d = Q.shape[0]
        eigs = np.linalg.eigvalsh(Q)
        super().__init__(d, lipschitz=0.0, convex=bool(eigs[0] >= -1e-12))
        self.Q = Q
        self.c = np.zeros(d) if c is None else np.asarray(c, dtype=float)
        self._B = np.eye(d) if B is None else np.asarray(B, dtype=float)
        self.seed = seed

    def norm_matrix(self) -> np.ndarray:
        return self._B

    def _value(self, x):
        return float(0.5 * x @ (self.Q @ x) - self.c @ x)

    def _grad(self, x):
        return self.Q @ x - self.c

    def _hess(self, x):
        return self.Q.copy()


def gen_quadratic(d: int, seed: int = 0, cond: float = 10.0) -> QuadraticProblem:
    """Random strongly convex quadratic with spectrum in [1, cond]."""
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((d, d))
    Qo, _ = np.linalg.qr(G)
    lam = np.linspace(1.0, cond, d)
    Q = (Qo * lam) @ Qo.T
    c = rng.uniform(-1.0, 1.0, size=d)
    p = QuadraticProblem(0.5 * (Q + Q.T), c, seed=seed)
    p.strong_convexity = 1.0  # B = I and spectrum >= 1
    return p


# ---------------------------------------------------------------------------
# wrappers
# ---------------------------------------------------------------------------


class TikhonovRegularizedProblem(ProblemOracle):
    """base(x) + 0.5 * coeff * ||x||_2^2, keeping the base problem's norm
    matrix B.

    Adding a Euclidean quadratic leaves the Hessian Lipschitz constant
    unchanged and makes the problem strongly convex with
    mu = coeff / lambda_max(B) relative to B.
    """

    kind = "regularized"

    def __init__(self, base: ProblemOracle, coeff: float = 1.0):
        B = base.norm_matrix()
        lam_max = float(np.linalg.eigvalsh(B)[-1])
        super().__init__(base.dim, lipschitz=base.lipschitz,
                         strong_convexity=coeff / lam_max, convex=True)
        self.base = base
        self.coeff = float(coeff)
        self._Bmat = B

    def norm_matrix(self) -> np.ndarray:
        return self._Bmat

    def _value(self, x):
        return self.base._value(x) + 0.5 * self.coeff * float(x @ x)

    def _grad(self, x):
        return self.base._grad(x) + self.coeff * x

    def _hess(self, x):
        return self.base._hess(x) + self.coeff * np.eye(self.dim)


def fd_step_default(x: np.ndarray) -> float:
    """Forward-difference step sqrt(machine eps) * (1 + ||x||_inf)."""
    return float(np.sqrt(np.finfo(float).eps) * (1.0 + np.max(np.abs(x), initial=0.0)))


def _fd_hessian_from(gradfun, x: np.ndarray, delta: float) -> np.ndarray:
    d = x.shape[0]
    g0 = gradfun(x)
    H = np.empty((d, d))
    for i in range(d):
        xp = x.copy()
        xp[i] += delta
        H[:, i] = (gradfun(xp) - g0) / delta
    return 0.5 * (H + H.T)


def finite_diff_hessian(oracle: ProblemOracle, x: np.ndarray,
                        delta: float | None = None) -> np.ndarray:
    """Symmetrized forward-difference Hessian from d+1 counted gradient
    calls: column i is (grad(x + delta e_i) - grad(x)) / delta."""
    x = np.asarray(x, dtype=float)
    if delta is None:
        delta = fd_step_default(x)
    if delta <= 0:
        raise ValueError("delta must be positive")
    return _fd_hessian_from(oracle.grad, x, delta)


class FiniteDiffHessianOracle(ProblemOracle):
    """Expose a Hessian for a gradient-only oracle via finite differences.

    ``hess`` costs d+1 gradient units on this wrapper's counters and never
    increments n_hess, matching the work model HessCost = d * GradCost.
    """

    kind = "finite-diff"

    def __init__(self, base: ProblemOracle, step: float | None = None):
        super().__init__(base.dim, lipschitz=base.lipschitz,
                         strong_convexity=base.strong_convexity, convex=base.convex)
        self.base = base
        self.step = step

    def norm_matrix(self) -> np.ndarray:
        return self.base.norm_matrix()

    def hess(self, x: np.ndarray) -> np.ndarray:
        return finite_diff_hessian(self, self._vec(x), self.step)

    def _value(self, x):
        return self.base._value(x)

    def _grad(self, x):
        return self.base._grad(x)

    def _hess(self, x):
        # uncounted telemetry path: difference uncounted base gradients
        step = self.step if self.step is not None else fd_step_default(x)
        return _fd_hessian_from(self.base._grad, x, step)


# ---------------------------------------------------------------------------
# Lipschitz estimation (for problems without an analytic constant)
# ---------------------------------------------------------------------------


def estimate_hessian_lipschitz(oracle: ProblemOracle, ctx: NormContext,
                               n_pairs: int = 50, radius: float = 2.0,
                               seed: int = 0, safety: float = 1.5) -> float:
    """Sampled lower bound on the Hessian Lipschitz constant in the B
    geometry, inflated by ``safety``.

    Draws point pairs uniform in [-radius, radius]^d and maximizes
    ||H(x) - H(y)||_B-op / ||x - y||_B.  Uncounted.
    """
    rng = np.random.default_rng(seed)
    best = 0.0
    for _ in range(n_pairs):
        x = rng.uniform(-radius, radius, size=oracle.dim)
        y = rng.uniform(-radius, radius, size=oracle.dim)
        dist = ctx.primal_norm(x - y)
        if dist < 1e-12:
            continue
        D = oracle._hess(x) - oracle._hess(y)
        W = solve_triangular(ctx.chol, D, lower=True)
        Ared = solve_triangular(ctx.chol, W.T, lower=True)
        opnorm = float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (Ared + Ared.T)))))
        best = max(best, opnorm / dist)
    return safety * best


# ---------------------------------------------------------------------------
# plain-text serialization (replayable instances)
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return repr(float(v))


def _write_matrix(lines: list[str], name: str, M: np.ndarray) -> None:
    M = np.atleast_2d(M)
    lines.append(f"{name} {M.shape[0]} {M.shape[1]}")
    for row in M:
        lines.append(" ".join(_fmt(v) for v in row))


def save_problem(problem: ProblemOracle, path) -> None:
    """Write a problem instance as locale-independent text: a header with
    the dimensions and scalars, then row-major matrix entries."""
    lines = ["lazynewton-problem 1", f"kind {problem.kind}"]
    if isinstance(problem, LogSumExpProblem):
        lines += [f"n {problem.n}", f"d {problem.dim}", f"mu {_fmt(problem.mu)}",
                  f"delta {_fmt(problem.delta)}", f"seed {problem.seed if problem.seed is not None else -1}"]
        _write_matrix(lines, "A", problem.A)
        _write_matrix(lines, "b", problem.b.reshape(1, -1))
    elif isinstance(problem, SeparableProblem):
        lines += [f"n {problem.n}", f"d {problem.dim}", f"phi {problem.phi.name}",
                  f"b_mode {problem.b_mode}", f"delta {_fmt(problem.delta)}",
                  f"seed {problem.seed if problem.seed is not None else -1}"]
        _write_matrix(lines, "A", problem.A)
    elif isinstance(problem, QuadraticProblem):
        lines += [f"d {problem.dim}", f"seed {problem.seed if problem.seed is not None else -1}"]
        _write_matrix(lines, "Q", problem.Q)
        _write_matrix(lines, "c", problem.c.reshape(1, -1))
    else:
        raise ValueError(f"cannot serialize problem kind {problem.kind!r}")
    try:
        Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")
    except OSError as exc:
        raise IOFailure(f"cannot write problem file {path}: {exc}") from exc


def load_problem(path) -> ProblemOracle:
    """Inverse of ``save_problem``."""
    try:
        raw = Path(path).read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise IOFailure(f"cannot read problem file {path}: {exc}") from exc
    if not raw or raw[0].split() != ["lazynewton-problem", "1"]:
        raise ValueError(f"{path}: not a lazynewton problem file")
    fields: dict[str, str] = {}
    arrays: dict[str, np.ndarray] = {}
    i = 1
    while i < len(raw):
        parts = raw[i].split()
        if not parts:
            i += 1
            continue
        if parts[0] in ("A", "b", "Q", "c"):  # matrix block: "name rows cols"
            name, nrows, ncols = parts[0], int(parts[1]), int(parts[2])
            block = raw[i + 1: i + 1 + nrows]
            arrays[name] = np.array([[float(v) for v in line.split()] for line in block])
            if arrays[name].shape != (nrows, ncols):
                raise ValueError(f"{path}: matrix block {name} has wrong shape")
            i += 1 + nrows
        else:
            fields[parts[0]] = " ".join(parts[1:])
            i += 1
    kind = fields["kind"]
    seed = int(fields.get("seed", "-1"))
    seed_val = None if seed < 0 else seed
    if kind == "logsumexp":
        return LogSumExpProblem(arrays["A"], arrays["b"].ravel(), float(fields["mu"]),
                                delta=float(fields["delta"]), seed=seed_val)
    if kind == "separable":
        return SeparableProblem(arrays["A"], fields["phi"], b_mode=fields["b_mode"],
                                delta=float(fields["delta"]), seed=seed_val)
    if kind == "quadratic":
        return QuadraticProblem(arrays["Q"], arrays["c"].ravel(), seed=seed_val)
    raise ValueError(f"unknown problem kind {kind!r}")
