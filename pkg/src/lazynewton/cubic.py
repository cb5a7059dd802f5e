"""Exact global minimization of the cubically regularized quadratic model.

For a gradient g at the current point and a snapshot Hessian H (possibly
from a different point), the step minimizes

    <g, s> + 0.5 <H s, s> + (M/6) ||s||^3

over s, with ||.|| the B-norm.  In the snapshot eigenbasis this is a
diagonal problem: the optimal radius r solves the scalar secular equation
phi(r) = ||s(r)|| - r = 0 with s(r) = (H + (M r / 2) B)^-1 g, which is
strictly decreasing on its domain.  A bisection-safeguarded univariate
Newton iteration finds the root; when the gradient has no component along
the leftmost eigenvector the root disappears (hard case) and the step is
completed with an explicit eigenvector term.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import RootFindFailure, SingularShift
from .linalg import HessianSnapshot, NormContext

TOL_ROOT = 1e-10
TOL_STAT = 1e-8
MAX_ROOT_ITERS = 200
TINY_GRADIENT = 1e-15
HARD_CASE_RTOL = 1e-11
BRACKET_OFFSET = 1e-12


@dataclass
class CubicStepResult:
    """Outcome of one cubic step.

    T is the new point, r = ||T - x|| in the B-norm, tau = M*r/2 the final
    shift, and model_decrease the drop of the regularized model from x to T
    (nonnegative because T is a global minimizer).
    """

    T: np.ndarray
    r: float
    tau: float
    hard_case: bool
    root_iters: int
    model_decrease: float
    step: np.ndarray


def _phi_eigbasis(eig: np.ndarray, gt2: np.ndarray, M: float, r: float) -> float:
    den = np.maximum(eig + 0.5 * M * r, 0.25 * M * BRACKET_OFFSET)
    return float(np.sqrt(np.sum(gt2 / den**2))) - r


def _phi_and_deriv(eig: np.ndarray, gt2: np.ndarray, M: float, r: float):
    den = np.maximum(eig + 0.5 * M * r, 0.25 * M * BRACKET_OFFSET)
    s2 = gt2 / den**2
    norm_s = float(np.sqrt(np.sum(s2)))
    if norm_s == 0.0:
        return -r, -1.0
    dnorm = -0.5 * M * float(np.sum(s2 / den)) / norm_s
    return norm_s - r, dnorm - 1.0


def phi(snap: HessianSnapshot, g: np.ndarray, M: float, r: float) -> float:
    """Secular function ||s(r)||_B - r with (H + (M r/2) B) s(r) = g.

    Only defined while the shifted matrix is positive definite.
    """
    if float(snap.eigvals[0]) + 0.5 * M * r <= 0.0:
        raise SingularShift(
            f"phi undefined at r={r!r}: shifted matrix not positive definite"
        )
    gt = snap.transform_gradient(g)
    den = snap.eigvals + 0.5 * M * r
    return float(np.sqrt(np.sum((gt / den) ** 2))) - r


def _find_root(eig: np.ndarray, gt2: np.ndarray, M: float, r_lo: float):
    """Safeguarded Newton for phi(r) = 0 inside a sign-changing bracket.

    Keeps phi(lo) >= 0 > phi(hi); a Newton iterate leaving the bracket is
    replaced by bisection.  Returns (r, iterations).
    """
    iters = 0
    lo = r_lo
    hi = max(r_lo, 1.0)
    while _phi_eigbasis(eig, gt2, M, hi) >= 0.0:
        hi *= 2.0
        iters += 1
        if iters >= MAX_ROOT_ITERS:
            raise RootFindFailure("bracket expansion exhausted its budget")
    r = 0.5 * (lo + hi)
    while iters < MAX_ROOT_ITERS:
        val, der = _phi_and_deriv(eig, gt2, M, r)
        iters += 1
        if abs(val) <= TOL_ROOT * (1.0 + r):
            # One Newton polish; phi' <= -1, so the correction is at most
            # |phi(r)| and cannot leave the neighborhood of the root.
            r_pol = r - val / der
            val_pol, _ = _phi_and_deriv(eig, gt2, M, r_pol)
            iters += 1
            return (r_pol, iters) if abs(val_pol) <= abs(val) else (r, iters)
        if val > 0.0:
            lo = r
        else:
            hi = r
        if hi - lo <= 4.0 * np.finfo(float).eps * max(1.0, hi):
            # Bracket collapsed to machine resolution: phi is steeper than
            # one ulp of r can resolve.  Return the better endpoint.
            v_lo, _ = _phi_and_deriv(eig, gt2, M, lo)
            v_hi, _ = _phi_and_deriv(eig, gt2, M, hi)
            return (lo, iters + 2) if abs(v_lo) <= abs(v_hi) else (hi, iters + 2)
        r_newton = r - val / der
        r = r_newton if lo < r_newton < hi else 0.5 * (lo + hi)
    raise RootFindFailure(
        f"no root of the cubic secular equation after {MAX_ROOT_ITERS} iterations"
    )


def _solve_eigbasis(snap: HessianSnapshot, gt: np.ndarray, M: float):
    """Solve the diagonal subproblem in the eigenbasis.

    Returns (v, r, hard_case, iters) where v is the step expressed in
    eigen-coordinates, so ||v||_2 equals the B-norm of the step.
    """
    eig = snap.eigvals
    d = eig.shape[0]
    gnorm = float(np.linalg.norm(gt))
    neg_curv = max(-float(eig[0]), 0.0)

    if gnorm <= TINY_GRADIENT:
        if neg_curv == 0.0:
            return np.zeros(d), 0.0, False, 0
        r = 2.0 * neg_curv / M
        v = np.zeros(d)
        v[0] = r  # pure leftmost-eigenvector step, positive by convention
        return v, r, True, 0

    gt2 = gt * gt
    r_hard = 2.0 * neg_curv / M
    r_lo = r_hard + BRACKET_OFFSET
    phi_lo = _phi_eigbasis(eig, gt2, M, r_lo)

    if phi_lo < 0.0:
        # No root above r_lo.  Either the genuine hard case (indefinite
        # Hessian, gradient orthogonal to the leftmost eigenvector) or a PSD
        # model whose interior Newton step is shorter than the bracket
        # offset.  Solve on the complement of the singular eigenspace and
        # make up the remaining length along the first leftmost eigenvector.
        leftmost_tiny = abs(float(gt[0])) <= HARD_CASE_RTOL * gnorm
        den = eig + 0.5 * M * r_hard
        tol_den = 0.5 * M * BRACKET_OFFSET + 1e-14 * max(1.0, abs(float(eig[-1])))
        mask = den < tol_den
        s = np.where(mask, 0.0, gt / np.where(mask, 1.0, den))
        norm_s = float(np.linalg.norm(s))
        alpha = float(np.sqrt(max(r_hard**2 - norm_s**2, 0.0)))
        v = -s
        v[0] += alpha
        r = float(np.linalg.norm(v))
        return v, r, neg_curv > 0.0 and leftmost_tiny, 0

    r, iters = _find_root(eig, gt2, M, r_lo)
    v = -gt / (eig + 0.5 * M * r)
    return v, float(np.linalg.norm(v)), False, iters


def solve_cubic_model(snap: HessianSnapshot, g: np.ndarray, M: float):
    """Minimize the cubic model for gradient g with regularization M > 0.

    Returns (step, r, hard_case, iters, model_decrease): step in original
    coordinates, r its B-norm.
    """
    if M <= 0:
        raise ValueError("M must be positive")
    gt = snap.transform_gradient(g)
    v, r, hard, iters = _solve_eigbasis(snap, gt, M)
    model = float(gt @ v + 0.5 * np.sum(snap.eigvals * v * v)
                  + (M / 6.0) * np.linalg.norm(v) ** 3)
    step = snap.untransform_step(v)
    return step, r, hard, iters, max(-model, 0.0)


def solve_root(snap: HessianSnapshot, g: np.ndarray, M: float):
    """Root of the secular equation plus the corresponding step.

    Returns (r, step, hard_case).  In the hard case r = 2*xi/M and the step
    carries an explicit leftmost-eigenvector component scaled so that its
    B-norm equals r.
    """
    step, r, hard, _, _ = solve_cubic_model(snap, g, M)
    return r, step, hard


def cubic_step(oracle, ctx: NormContext, snap: HessianSnapshot, x: np.ndarray,
               M: float, grad: np.ndarray | None = None) -> CubicStepResult:
    """One cubic-regularized step from x using the snapshot Hessian.

    Evaluates the gradient at x once unless ``grad`` is supplied by the
    caller (the outer loops pass the gradient they already computed for the
    termination test).
    """
    g = oracle.grad(x) if grad is None else np.asarray(grad, dtype=float)
    step, r, hard, iters, decrease = solve_cubic_model(snap, g, M)
    return CubicStepResult(T=np.asarray(x, dtype=float) + step, r=r,
                           tau=0.5 * M * r, hard_case=hard, root_iters=iters,
                           model_decrease=decrease, step=step)
