"""Time-parallel iterative solvers for implicit-Euler parabolic problems.

The package assembles the block lower-bidiagonal time-global system of the
implicit Euler method, reformulates it as a symmetric saddle-point problem,
and solves it with a damped two-stage iteration (or preconditioned MINRES)
whose Schur-complement preconditioner is diagonalized by a fast sine
transform in time, so that every frequency block is an independent spatial
solve.
"""

from .errors import (
    BoundViolationError,
    DiagnosticModeRequiredError,
    DimensionMismatchError,
    InputError,
    NotSpdError,
    SolverDivergenceError,
)
from .linalg import (
    DEFAULT_DENSE_EIG_LIMIT,
    LanczosResult,
    SpatialMatrix,
    SpdFactor,
    add_matrices,
    cholesky_solve,
    dense_generalized_eig_extremal,
    lanczos_extremal_eig,
    spmv,
    weighted_norm,
)
from .problems import (
    ProblemSpec,
    TimeGrid,
    assemble_mass_stiffness_1d,
    assemble_mass_stiffness_2d,
    build_time_grid,
    compute_alpha,
    load_problem,
    make_heat_problem,
    save_problem,
)
from .dst import (
    DstPlan,
    dst_forward,
    dst_forward_transpose,
    dst_inverse,
    dst_inverse_transpose,
)
from .operators import TimeGlobalSystem, d_norm, dense_operator, fold_rhs
from .spatial import (
    DirectSolver,
    JacobiSolver,
    MgHierarchy,
    MgVCycleSolver,
    SpatialSolver,
    build_mg_hierarchy,
    estimate_gamma_Gamma,
    estimate_rho_A,
    make_solver,
    materialize_inverse,
)
from .schur import SchurPreconditioner, build_schur_preconditioner, frequency_weights
from .solvers import (
    BlockDiagSolver,
    ConvergenceHistory,
    RateReport,
    UzawaConfig,
    compute_rate_report,
    minres_solve,
    safe_damping,
    sequential_euler_solve,
    uzawa_solve,
)
from .parallel import get_num_threads, set_num_threads

__version__ = "1.0.0"
