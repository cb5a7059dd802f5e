"""Independent reference computations used as test oracles.

Everything here deliberately avoids the library's own solution paths:
finite differences for derivatives, dense numpy solves for linear systems,
and brute-force grids for the cubic model minimum.
"""

import numpy as np


def central_diff_grad(f, x, h=1e-6):
    """Central-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def forward_diff_jac(gradfun, x, h=1e-6):
    """Forward-difference Jacobian of a vector function (Hessian when the
    function is a gradient), symmetrized."""
    x = np.asarray(x, dtype=float)
    g0 = gradfun(x)
    H = np.empty((x.size, x.size))
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        H[:, i] = (gradfun(xp) - g0) / h
    return 0.5 * (H + H.T)


def cubic_model_value(g, H, B, M, s):
    """<g,s> + 0.5 s^T H s + (M/6) ||s||_B^3 for one step s."""
    s = np.asarray(s, dtype=float)
    nrm = np.sqrt(max(float(s @ (B @ s)), 0.0))
    return float(g @ s + 0.5 * s @ (H @ s) + (M / 6.0) * nrm**3)


def cubic_model_grid_min(g, H, B, M, radius=3.0, points=201):
    """Brute-force minimum of the cubic model over the [-radius, radius]^d
    grid, evaluated in float32 slabs (noise ~1e-5, far inside the 1e-3
    comparison slack) to bound memory and bandwidth."""
    d = g.shape[0]
    g32 = np.asarray(g, dtype=np.float32)
    H32 = np.asarray(H, dtype=np.float32)
    B32 = np.asarray(B, dtype=np.float32)
    axis = np.linspace(-radius, radius, points, dtype=np.float32)
    best = 0.0  # the grid contains s = 0
    if d == 1:
        S = axis.reshape(-1, 1)
        best = min(best, _model_block_min(g32, H32, B32, M, S))
    elif d == 2:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        S = np.column_stack([X.ravel(), Y.ravel()])
        best = min(best, _model_block_min(g32, H32, B32, M, S))
    elif d == 3:
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        block = np.empty((axis.size * axis.size, 3), dtype=np.float32)
        block[:, 1] = X.ravel()
        block[:, 2] = Y.ravel()
        for a in axis:
            block[:, 0] = a
            best = min(best, _model_block_min(g32, H32, B32, M, block))
    else:
        raise ValueError("grid search supports d <= 3")
    return best


def _model_block_min(g, H, B, M, S):
    lin = S @ g
    quad = 0.5 * np.einsum("ij,ij->i", S @ H, S)
    nrm2 = np.maximum(np.einsum("ij,ij->i", S @ B, S), 0.0)
    vals = lin + quad + np.float32(M / 6.0) * (nrm2 * np.sqrt(nrm2))
    return float(np.min(vals))


def stationarity_residual(ctx, g, H, M, step):
    """Dual norm of grad + H s + (M ||s||/2) B s for a candidate step."""
    r = ctx.primal_norm(step)
    res = g + H @ step + 0.5 * M * r * (ctx.B @ step)
    return ctx.dual_norm(res)


def random_spd(rng, d, lo=0.5, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = rng.uniform(lo, hi, size=d)
    return (Q * lam) @ Q.T


def random_symmetric_with_spectrum(rng, d, lo=-2.0, hi=2.0):
    Q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    lam = rng.uniform(lo, hi, size=d)
    return (Q * lam) @ Q.T
