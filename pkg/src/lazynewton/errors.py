"""Exception types raised across the library."""


class LazyNewtonError(Exception):
    """Base class for all library-specific errors."""


class DimensionMismatch(LazyNewtonError, ValueError):
    """A vector or matrix does not match the expected dimension."""


class NotSymmetric(LazyNewtonError, ValueError):
    """Input matrix exceeds the symmetry tolerance."""


class NotPositiveDefinite(LazyNewtonError, ValueError):
    """Matrix required to be SPD has a nonpositive Cholesky pivot."""


class EigSolverFailure(LazyNewtonError, RuntimeError):
    """The dense symmetric eigensolver did not converge."""


class SingularShift(LazyNewtonError, RuntimeError):
    """Shifted matrix H + tau*B is not positive definite; the caller must
    raise the shift or switch to the hard-case branch."""


class RootFindFailure(LazyNewtonError, RuntimeError):
    """The univariate root finder exhausted its iteration budget."""


class NoLipschitzConstant(LazyNewtonError, ValueError):
    """A fixed-regularization method was requested without M and without a
    known Hessian Lipschitz constant to derive it from."""


class AdaptiveDivergence(LazyNewtonError, RuntimeError):
    """Adaptive regularization exceeded its cap, which signals an
    inconsistent oracle (sufficient decrease never triggers)."""


class IOFailure(LazyNewtonError, RuntimeError):
    """Reading or writing experiment artifacts failed."""


class NonConvexWarning(UserWarning):
    """A snapshot Hessian used by a convex-only method has a clearly
    negative eigenvalue."""
