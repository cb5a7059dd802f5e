"""Newton-type optimization with lazy Hessian updates.

The Hessian is factorized once per phase of m iterations and reused with
fresh gradients, cutting the dominant per-step cost; regularization is
increased in proportion to m to absorb the staleness.
"""

from .bench import (
    CSV_HEADER,
    ExperimentResult,
    ExperimentSpec,
    emit_csv,
    optimal_curve_m,
    run_experiment,
    work_curve,
)
from .cubic import CubicStepResult, cubic_step, phi, solve_cubic_model, solve_root
from .errors import (
    AdaptiveDivergence,
    DimensionMismatch,
    EigSolverFailure,
    IOFailure,
    LazyNewtonError,
    NoLipschitzConstant,
    NonConvexWarning,
    NotPositiveDefinite,
    NotSymmetric,
    RootFindFailure,
    SingularShift,
)
from .linalg import (
    HessianSnapshot,
    NormContext,
    dual_norm,
    factorize_snapshot,
    make_norm_context,
    primal_norm,
    solve_shifted,
    xi,
    xi_of_matrix,
)
from .problems import (
    Counters,
    FiniteDiffHessianOracle,
    LogSumExpProblem,
    ProblemOracle,
    QuadraticProblem,
    SeparableProblem,
    TikhonovRegularizedProblem,
    default_delta,
    estimate_hessian_lipschitz,
    finite_diff_hessian,
    gen_logsumexp,
    gen_quadratic,
    gen_separable,
    load_problem,
    logsumexp_value_grad_hess,
    save_problem,
)
from .solvers import (
    IterationRecord,
    SolverConfig,
    StationarityReport,
    Trace,
    phase_start,
    run,
    run_adaptive_cubic,
    run_adaptive_gradreg,
    run_cubic,
    run_gradreg,
    stationarity_report,
)

__version__ = "0.1.0"
