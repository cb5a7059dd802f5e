"""Dense symmetric linear algebra over a B-weighted geometry.

A fixed SPD matrix B defines the primal norm ||x|| = <Bx, x>^(1/2) and the
dual norm ||g||_* = <g, B^-1 g>^(1/2).  A Hessian H evaluated at a snapshot
point is reduced by congruence with the Cholesky factor of B and
eigendecomposed once (O(d^3)); every subsequent shifted solve
(H + tau*B) h = -g then costs O(d^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh, solve_triangular

from .errors import (
    DimensionMismatch,
    EigSolverFailure,
    NotPositiveDefinite,
    NotSymmetric,
    SingularShift,
)

SYMMETRY_RTOL = 1e-12


def _check_symmetric(mat: np.ndarray, name: str) -> np.ndarray:
    mat = np.asarray(mat, dtype=float)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise DimensionMismatch(f"{name} must be a square matrix, got shape {mat.shape}")
    scale = np.linalg.norm(mat, "fro")
    asym = np.linalg.norm(mat - mat.T, "fro")
    if asym > SYMMETRY_RTOL * max(1.0, scale):
        raise NotSymmetric(
            f"{name} is not symmetric: ||A - A^T||_F = {asym:.3e} "
            f"exceeds {SYMMETRY_RTOL:.0e} * max(1, ||A||_F)"
        )
    # Finite-difference Hessians are only approximately symmetric.
    return 0.5 * (mat + mat.T)


@dataclass
class NormContext:
    """SPD matrix B with its lower Cholesky factor C (C C^T = B)."""

    dim: int
    B: np.ndarray
    chol: np.ndarray

    def primal_norm(self, x: np.ndarray) -> float:
        """||x|| = <Bx, x>^(1/2), evaluated as ||C^T x||_2 so it is never
        negative under roundoff."""
        x = self._check_vec(x)
        return float(np.linalg.norm(self.chol.T @ x))

    def dual_norm(self, g: np.ndarray) -> float:
        """||g||_* = <g, B^-1 g>^(1/2), via a triangular solve with C."""
        g = self._check_vec(g)
        y = solve_triangular(self.chol, g, lower=True)
        return float(np.linalg.norm(y))

    def solve_B(self, g: np.ndarray) -> np.ndarray:
        """Return B^-1 g using the two triangular solves with C."""
        g = self._check_vec(g)
        y = solve_triangular(self.chol, g, lower=True)
        return solve_triangular(self.chol.T, y, lower=False)

    def _check_vec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.dim,):
            raise DimensionMismatch(f"expected vector of length {self.dim}, got shape {x.shape}")
        return x


def make_norm_context(B: np.ndarray) -> NormContext:
    """Validate B (symmetric positive definite) and precompute its Cholesky
    factor.

    Raises NotSymmetric or NotPositiveDefinite on bad input.
    """
    B = _check_symmetric(B, "B")
    try:
        C = np.linalg.cholesky(B)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"B is not positive definite: {exc}") from exc
    return NormContext(dim=B.shape[0], B=B, chol=C)


def primal_norm(ctx: NormContext, x: np.ndarray) -> float:
    return ctx.primal_norm(x)


def dual_norm(ctx: NormContext, g: np.ndarray) -> float:
    return ctx.dual_norm(g)


@dataclass
class HessianSnapshot:
    """Factorized Hessian H = U diag(eigvals) U^T with U U^T = B.

    U = C V where V eigendecomposes the congruence C^-1 H C^-T, so the
    eigenvalues are exactly those of B^(-1/2) H B^(-1/2).  The snapshot keeps
    V and the norm context so shifted solves cost O(d^2).
    """

    z: np.ndarray
    U: np.ndarray
    eigvals: np.ndarray
    ctx: NormContext
    V: np.ndarray
    n_solves: int = field(default=0)

    def transform_gradient(self, g: np.ndarray) -> np.ndarray:
        """Return U^-1 g = V^T C^-1 g.  Its 2-norm equals ||g||_*."""
        y = solve_triangular(self.ctx.chol, self.ctx._check_vec(g), lower=True)
        return self.V.T @ y

    def untransform_step(self, v: np.ndarray) -> np.ndarray:
        """Return U^-T v = C^-T (V v); the B-norm of the result is ||v||_2."""
        return solve_triangular(self.ctx.chol.T, self.V @ v, lower=False)


def factorize_snapshot(ctx: NormContext, H: np.ndarray, z: np.ndarray) -> HessianSnapshot:
    """Eigendecompose C^-1 H C^-T and store U = C V.

    Eigenvalues come out ascending; each eigenvector is sign-normalized so
    that its first largest-magnitude component is nonnegative, which makes
    runs deterministic across platforms.
    """
    H = _check_symmetric(H, "H")
    if H.shape[0] != ctx.dim:
        raise DimensionMismatch(f"H has shape {H.shape}, context dimension is {ctx.dim}")
    W = solve_triangular(ctx.chol, H, lower=True)
    A = solve_triangular(ctx.chol, W.T, lower=True)
    A = 0.5 * (A + A.T)
    try:
        eigvals, V = eigh(A)
    except Exception as exc:  # scipy raises LinAlgError on non-convergence
        raise EigSolverFailure(f"symmetric eigendecomposition failed: {exc}") from exc
    for j in range(V.shape[1]):
        col = V[:, j]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            V[:, j] = -col
    U = ctx.chol @ V
    return HessianSnapshot(z=np.array(z, dtype=float, copy=True), U=U,
                           eigvals=eigvals, ctx=ctx, V=V)


def solve_shifted(snap: HessianSnapshot, tau: float, g: np.ndarray) -> np.ndarray:
    """Solve (H + tau*B) h = -g in O(d^2) from the snapshot factorization.

    Raises SingularShift when the shifted matrix is not positive definite,
    which tells the caller to raise tau or enter the hard case.
    """
    den = snap.eigvals + tau
    if den[0] <= 0.0:
        raise SingularShift(
            f"min eigenvalue {snap.eigvals[0]:.6e} + tau {tau:.6e} is not positive"
        )
    gt = snap.transform_gradient(g)
    snap.n_solves += 1
    return snap.untransform_step(-gt / den)


def xi(snap: HessianSnapshot) -> float:
    """Positive part of minus the smallest eigenvalue of B^(-1/2) H B^(-1/2).

    Zero exactly when the snapshot Hessian is PSD in the B geometry.
    """
    return max(-float(snap.eigvals[0]), 0.0)


def xi_of_matrix(ctx: NormContext, H: np.ndarray) -> float:
    """Same quantity as ``xi`` for a raw Hessian, without keeping the
    factorization (used for telemetry)."""
    H = 0.5 * (np.asarray(H, dtype=float) + np.asarray(H, dtype=float).T)
    W = solve_triangular(ctx.chol, H, lower=True)
    A = solve_triangular(ctx.chol, W.T, lower=True)
    w = np.linalg.eigvalsh(0.5 * (A + A.T))
    return max(-float(w[0]), 0.0)
