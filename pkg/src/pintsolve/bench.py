"""Benchmark drivers: eigenvalue tables, iteration-count tables, convergence
histories, spectral-bound checks, and thread-scaling runs.

Every driver returns a list of row dicts and has a matching CSV schema
(see the ``*_CSV_HEADER`` constants).  Floats are written with 17 significant
digits so the CSV round-trips exactly.
"""

from __future__ import annotations

import statistics
import time

import numpy as np

from .errors import BoundViolationError
from .linalg import dense_generalized_eig_extremal, lanczos_extremal_eig
from .operators import TimeGlobalSystem, dense_operator
from .problems import ProblemSpec, build_time_grid, make_heat_problem
from .schur import SchurPreconditioner, build_schur_preconditioner
from .solvers import (
    BlockDiagSolver,
    UzawaConfig,
    minres_solve,
    sequential_euler_solve,
    uzawa_solve,
)
from .spatial import build_mg_hierarchy, estimate_gamma_Gamma, estimate_rho_A, make_solver
from . import parallel, timing

TABLE1_CSV_HEADER = "h,N,lambda_min,lambda_max,kappa"
TABLE2_CSV_HEADER = "h,N,iterations"
HISTORY_CSV_HEADER = "iter,solver,s_norm_error,residual"
SPECTRAL_CSV_HEADER = "alpha,gamma,Gamma,lam_lo,lam_hi,bound_lo,bound_hi,pass"
SCALING_CSV_HEADER = "threads,time_per_iter,total_time,fft_share,spatial_share"

# run_table1 runs dense generalized eigensolves only up to this many unknowns;
# larger cells switch to the matrix-free Lanczos path (a dense solve at the
# module-wide limit would take hours on one core).
TABLE1_DENSE_LIMIT = 2500


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def rows_to_csv(header: str, rows: list[dict]) -> str:
    cols = header.split(",")
    lines = [header]
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in cols))
    return "\n".join(lines) + "\n"


def _schur_spectrum(spec: ProblemSpec, seed: int, lanczos_iters: int) -> tuple[float, float]:
    """Extremal eigenvalues of the Schur complement preconditioned by the
    transform-diagonalized surrogate (exact spatial solves)."""
    system = TimeGlobalSystem(spec, diagnostic=True)
    system.build_exact_solvers()
    ht = SchurPreconditioner(spec, solver_kind="direct")
    N, dim = spec.N, spec.dim
    if N * dim <= TABLE1_DENSE_LIMIT:
        s_mat = dense_operator(system.apply_S, N, dim)
        h_mat = dense_operator(ht.apply, N, dim)
        return dense_generalized_eig_extremal(s_mat, h_mat)
    rng = np.random.default_rng(seed)
    x0 = rng.standard_normal(N * dim)
    res = lanczos_extremal_eig(
        lambda v: ht.apply_inverse(system.apply_S(v.reshape(N, dim))).ravel(),
        lambda v: ht.apply(v.reshape(N, dim)).ravel(),
        x0,
        iters=lanczos_iters,
    )
    return res.lam_min, res.lam_max


def run_table1(
    h_list: list[int] | None = None,
    n_list: list[int] | None = None,
    T: float = 1.0,
    seed: int = 7,
    lanczos_iters: int = 250,
) -> list[dict]:
    """Condition of the preconditioned Schur complement on the 1d problem.

    ``h_list`` holds mesh cell counts (h = 1/cells); columns are numbers of
    time steps.
    """
    h_list = h_list or [64, 128]
    n_list = n_list or [4, 8, 16, 32, 64, 128, 256, 512, 1024]
    rows = []
    for cells in h_list:
        for N in n_list:
            grid = build_time_grid("uniform", N, T)
            spec = make_heat_problem("1d", cells, grid, data="zero")
            lo, hi = _schur_spectrum(spec, seed, lanczos_iters)
            rows.append(
                {
                    "h": f"1/{cells}",
                    "N": N,
                    "lambda_min": lo,
                    "lambda_max": hi,
                    "kappa": hi / lo,
                }
            )
    return rows


def run_table2(
    h_list: list[int] | None = None,
    n_list: list[int] | None = None,
    T: float = 1.0,
    omega: float = 0.9,
    tol: float = 1e-6,
    vcycles: int = 1,
) -> list[dict]:
    """Iteration counts of the two-stage iteration on the 2d heat problem
    with one-V-cycle multigrid spatial solvers, stopped on the relative
    discrete energy norm of the error against the time-stepping oracle."""
    h_list = h_list or [8, 16, 32, 64]
    n_list = n_list or [128, 256, 512, 1024]
    rows = []
    for cells in h_list:
        hier = build_mg_hierarchy("2d", cells)
        for N in n_list:
            grid = build_time_grid("uniform", N, T)
            spec = make_heat_problem("2d", cells, grid, data="sine")
            system = TimeGlobalSystem(spec, diagnostic=True)
            u_star = sequential_euler_solve(spec)
            at = BlockDiagSolver(spec, "mg", hierarchy=hier, cycles=vcycles)
            ht = build_schur_preconditioner(spec, "mg", vcycles=vcycles)
            cfg = UzawaConfig(
                omega=omega, tol=tol, stopping="s_norm_error", max_iter=200
            )
            _, hist = uzawa_solve(system, at, ht, cfg, u_oracle=u_star)
            rows.append({"h": f"1/{cells}", "N": N, "iterations": hist.iterations})
    return rows


def run_history(
    N: int = 512,
    cells: int = 64,
    space: str = "1d",
    T: float = 1.0,
    omega: float = 0.9,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> list[dict]:
    """Error decay of the two-stage iteration for exact spatial solves and
    for one and two multigrid V-cycles, on one problem instance."""
    grid = build_time_grid("uniform", N, T)
    spec = make_heat_problem(space, cells, grid, data="sine")
    system = TimeGlobalSystem(spec, diagnostic=True)
    u_star = sequential_euler_solve(spec)
    hier = build_mg_hierarchy(space, cells)
    variants = [
        ("direct", {"kind": "direct"}),
        ("mg1", {"kind": "mg", "cycles": 1}),
        ("mg2", {"kind": "mg", "cycles": 2}),
    ]
    rows = []
    for label, opts in variants:
        kind = opts["kind"]
        cycles = opts.get("cycles", 1)
        at = BlockDiagSolver(spec, kind, hierarchy=hier, cycles=cycles)
        ht = build_schur_preconditioner(spec, kind, vcycles=cycles)
        cfg = UzawaConfig(
            omega=omega, tol=tol, stopping="s_norm_error",
            max_iter=max_iter, diagnostics=True,
        )
        _, hist = uzawa_solve(system, at, ht, cfg, u_oracle=u_star)
        for i in range(hist.iterations):
            rows.append(
                {
                    "iter": i + 1,
                    "solver": label,
                    "s_norm_error": hist.s_norm_error[i],
                    "residual": hist.residual[i],
                }
            )
    return rows


def run_spectral_check(
    N: int = 64,
    cells: int = 16,
    space: str = "2d",
    T: float = 1.0,
    solver_kind: str = "mg",
    vcycles: int = 1,
    seed: int = 11,
    slack: float = 1e-8,
) -> list[dict]:
    """Verify the proven two-sided spectral bounds on one problem instance.

    With exact spatial solves the preconditioned Schur spectrum must lie in
    [1/(2 alpha), 3 alpha]; with inexact solves of block quality (gamma,
    Gamma) it must lie in [gamma/(2 alpha), 3 alpha Gamma].  Raises
    BoundViolationError when the check fails.
    """
    grid = build_time_grid("uniform", N, T)
    spec = make_heat_problem(space, cells, grid, data="zero")
    system = TimeGlobalSystem(spec, diagnostic=True)
    system.build_exact_solvers()
    alpha = spec.alpha

    if solver_kind == "direct":
        gamma = big_gamma = 1.0
        ht = SchurPreconditioner(spec, solver_kind="direct")
    else:
        ht = build_schur_preconditioner(spec, solver_kind, vcycles=vcycles)
        gamma, big_gamma = 1.0, 1.0
        for k in range(N):
            g, bg = estimate_gamma_Gamma(
                ht.blocks[k], ht.solvers[k], spec.a_ref, seed=seed + k
            )
            gamma = min(gamma, g)
            big_gamma = max(big_gamma, bg)

    N_, dim = spec.N, spec.dim
    if N_ * dim <= TABLE1_DENSE_LIMIT:
        s_mat = dense_operator(system.apply_S, N_, dim)
        h_mat = dense_operator(ht.apply_inverse, N_, dim)
        # eigenvalues of Htilde^{-1} S = eigenvalues of the pencil (S, Htilde)
        lo, hi = dense_generalized_eig_extremal(
            s_mat, np.linalg.inv(0.5 * (h_mat + h_mat.T))
        )
    else:
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal(N_ * dim)
        res = lanczos_extremal_eig(
            lambda v: ht.apply_inverse(system.apply_S(v.reshape(N_, dim))).ravel(),
            lambda v: system.apply_S(v.reshape(N_, dim)).ravel(),
            x0,
            iters=200,
        )
        # with weight S instead of Htilde the Ritz values are still those of
        # the pencil (S, Htilde): Htilde^{-1} S is self-adjoint in both
        lo, hi = res.lam_min, res.lam_max

    bound_lo = gamma / (2.0 * alpha)
    bound_hi = 3.0 * alpha * big_gamma
    ok = (lo >= bound_lo - slack) and (hi <= bound_hi + slack)
    row = {
        "alpha": alpha,
        "gamma": gamma,
        "Gamma": big_gamma,
        "lam_lo": lo,
        "lam_hi": hi,
        "bound_lo": bound_lo,
        "bound_hi": bound_hi,
        "pass": int(ok),
    }
    if not ok:
        raise BoundViolationError(
            f"spectrum [{lo:.9g}, {hi:.9g}] leaves "
            f"[{bound_lo:.9g}, {bound_hi:.9g}] by more than {slack:g}"
        )
    return [row]


def run_scaling(
    thread_list: list[int] | None = None,
    N: int = 256,
    cells: int = 32,
    space: str = "2d",
    T: float = 1.0,
    omega: float = 0.9,
    iters: int = 10,
    repeats: int = 5,
) -> list[dict]:
    """Wall time per iteration of the two-stage iteration versus the number
    of worker threads, with the transform/spatial share of the total."""
    thread_list = thread_list or [1, 2, 4]
    grid = build_time_grid("uniform", N, T)
    spec = make_heat_problem(space, cells, grid, data="sine")
    system = TimeGlobalSystem(spec)
    hier = build_mg_hierarchy(space, cells)
    rows = []
    for threads in thread_list:
        parallel.set_num_threads(threads)
        at = BlockDiagSolver(spec, "mg", hierarchy=hier, cycles=1)
        ht = build_schur_preconditioner(spec, "mg", vcycles=1)
        cfg = UzawaConfig(omega=omega, tol=1e-30, max_iter=iters)
        uzawa_solve(system, at, ht, cfg)  # warm-up
        times = []
        fft_share = spatial_share = 0.0
        for _ in range(repeats):
            timing.reset()
            t0 = time.perf_counter()
            uzawa_solve(system, at, ht, cfg)
            total = time.perf_counter() - t0
            counters = timing.snapshot()
            times.append(total)
            fft_share = counters["fft"] / total
            spatial_share = counters["spatial"] / total
        total = statistics.median(times)
        rows.append(
            {
                "threads": threads,
                "time_per_iter": total / iters,
                "total_time": total,
                "fft_share": fft_share,
                "spatial_share": spatial_share,
            }
        )
    parallel.set_num_threads(1)
    return rows
