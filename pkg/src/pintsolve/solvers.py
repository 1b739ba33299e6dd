"""Inexact Uzawa iteration, rate theory, MINRES alternative, and the
sequential implicit-Euler oracle."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .errors import InputError, NotSpdError, SolverDivergenceError
from .linalg import SpatialMatrix, SpdFactor, add_matrices
from .operators import TimeGlobalSystem, d_norm
from .problems import ProblemSpec
from .schur import SchurPreconditioner
from .spatial import MgHierarchy, SpatialSolver, make_solver
from . import parallel, timing


@dataclass
class UzawaConfig:
    omega: float = 0.9
    max_iter: int = 200
    tol: float = 1e-8
    stopping: str = "preconditioned_residual"  # or "s_norm_error"
    record_history: bool = True
    diagnostics: bool = False  # record exact error norms against the oracle

    def __post_init__(self):
        if self.omega <= 0.0:
            raise InputError("damping parameter must be positive")
        if self.tol <= 0.0:
            raise InputError("tolerance must be positive")
        if self.stopping not in ("preconditioned_residual", "s_norm_error"):
            raise InputError(f"unknown stopping rule {self.stopping!r}")


@dataclass
class ConvergenceHistory:
    """Per-iteration record of residuals, error norms, and timings."""

    residual: list[float] = field(default_factory=list)
    s_norm_error: list[float | None] = field(default_factory=list)
    d_norm_error: list[float | None] = field(default_factory=list)
    wall_seconds: list[float] = field(default_factory=list)
    fft_seconds: list[float] = field(default_factory=list)
    spatial_seconds: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.residual)

    def append(self, residual, s_err, d_err, wall, fft, spatial) -> None:
        self.residual.append(residual)
        self.s_norm_error.append(s_err)
        self.d_norm_error.append(d_err)
        self.wall_seconds.append(wall)
        self.fft_seconds.append(fft)
        self.spatial_seconds.append(spatial)

    def to_csv(self) -> str:
        lines = ["iter,residual,s_norm_error,d_norm_error,wall_seconds,"
                 "fft_seconds,spatial_seconds"]
        for i in range(self.iterations):
            s = "" if self.s_norm_error[i] is None else f"{self.s_norm_error[i]:.17g}"
            d = "" if self.d_norm_error[i] is None else f"{self.d_norm_error[i]:.17g}"
            lines.append(
                f"{i + 1},{self.residual[i]:.17g},{s},{d},"
                f"{self.wall_seconds[i]:.17g},{self.fft_seconds[i]:.17g},"
                f"{self.spatial_seconds[i]:.17g}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class RateReport:
    """Proven contraction quantities of the damped two-stage iteration."""

    rho_a: float
    omega: float
    lam_min: float
    lam_max: float
    sigma_minus: float
    sigma_plus: float
    rho_u: float
    damping_ok: bool


def safe_damping(alpha: float, margin: float = 0.9) -> float:
    """Damping parameter that provably contracts with exact block solves.

    The preconditioned spectrum is bounded by 3*alpha, so any omega with
    omega * 3 * alpha < 2 converges; margin scales how close to that edge
    the returned value sits.
    """
    if alpha < 1.0:
        raise InputError("quasi-uniformity constant is at least one")
    return margin * 2.0 / (3.0 * alpha)


def compute_rate_report(
    rho_a: float, omega: float, lam_min: float, lam_max: float
) -> RateReport:
    if not 0.0 <= rho_a < 1.0:
        raise InputError("preconditioner quality must lie in [0, 1)")
    if omega <= 0.0 or lam_min <= 0.0 or lam_max <= 0.0:
        raise InputError("damping and eigenvalue bounds must be positive")
    t_minus = (1.0 - rho_a) * (1.0 - omega * lam_min)
    sigma_minus = 0.5 * (t_minus + np.sqrt(4.0 * rho_a + t_minus**2))
    t_plus = (1.0 + rho_a) * (1.0 + omega * lam_max) - 2.0
    sigma_plus = 0.5 * (t_plus + np.sqrt(4.0 * rho_a + t_plus**2))
    damping_ok = omega * lam_max < 2.0 * (1.0 - rho_a) / (1.0 + rho_a)
    return RateReport(
        rho_a=rho_a,
        omega=omega,
        lam_min=lam_min,
        lam_max=lam_max,
        sigma_minus=float(sigma_minus),
        sigma_plus=float(sigma_plus),
        rho_u=float(max(sigma_minus, sigma_plus)),
        damping_ok=bool(damping_ok),
    )


class BlockDiagSolver:
    """Preconditioner for the per-step block: tau_n times a spatial solver."""

    def __init__(self, spec: ProblemSpec, kind: str = "direct",
                 hierarchy: MgHierarchy | None = None, **opts):
        self.spec = spec
        self.kind = kind
        cache: dict[int, SpatialSolver] = {}
        self.solvers: list[SpatialSolver] = []
        for a_n in spec.stiffness:
            key = id(a_n)
            if key not in cache:
                cache[key] = make_solver(a_n, kind, hierarchy=hierarchy, **opts)
            self.solvers.append(cache[key])
        self.steps = spec.grid.steps

    def apply_inverse(self, b: np.ndarray) -> np.ndarray:
        out = np.empty_like(b)

        def block(n: int) -> None:
            out[n] = self.solvers[n].apply(b[n]) / self.steps[n]

        parallel.block_map(block, self.spec.N)
        return out

    def forward(self, x: np.ndarray) -> np.ndarray:
        return np.stack(
            [t * s.forward(xn) for t, s, xn in zip(self.steps, self.solvers, x)]
        )


def sequential_euler_solve(spec: ProblemSpec) -> np.ndarray:
    """Forward time-stepping sweep with exact per-step solves (the oracle)."""
    factors: dict[tuple[int, float], SpdFactor] = {}
    u = np.empty((spec.N, spec.dim))
    prev = spec.u_init
    for n in range(spec.N):
        tau = spec.grid.steps[n]
        key = (id(spec.stiffness[n]), tau)
        if key not in factors:
            with timing.timed("spatial"):
                factors[key] = SpdFactor(
                    add_matrices(1.0, spec.mass, tau, spec.stiffness[n])
                )
        with timing.timed("spatial"):
            u[n] = factors[key].solve(spec.mass.dot(prev) + tau * spec.load[n])
        prev = u[n]
    return u


def uzawa_solve(
    system: TimeGlobalSystem,
    atilde: BlockDiagSolver,
    htilde: SchurPreconditioner,
    cfg: UzawaConfig,
    initial: tuple[np.ndarray, np.ndarray] | None = None,
    u_oracle: np.ndarray | None = None,
) -> tuple[tuple[np.ndarray, np.ndarray], ConvergenceHistory]:
    """Damped two-stage iteration on the saddle-point system.

    The default stopping rule uses the preconditioned residual of the saddle
    system, evaluated with the auxiliary residual at the old iterate and the
    principal residual after the auxiliary update (both quadratic forms are
    by-products of the updates, so the rule costs no extra solves).
    """
    spec = system.spec
    f = system.rhs
    hist = ConvergenceHistory()
    if initial is not None:
        p, u = initial[0].copy(), initial[1].copy()
    else:
        p = np.zeros((spec.N, spec.dim))
        u = np.zeros((spec.N, spec.dim))

    diagnostics = cfg.diagnostics or cfg.stopping == "s_norm_error"
    u_star = None
    s_norm_ref = None
    if diagnostics:
        if u_oracle is None:
            u_oracle = sequential_euler_solve(spec)
        u_star = u_oracle
        system.build_exact_solvers()
        s_norm_ref = system.s_norm(u_star)
    record_d = diagnostics and atilde.kind == "direct" and htilde.solver_kind == "direct"

    ref = np.sqrt(
        max(np.sum(f * atilde.apply_inverse(f)) + np.sum(f * htilde.apply_inverse(f)), 0.0)
    )
    if ref == 0.0:
        hist.converged = True
        return (p, u), hist

    rho_a_for_d = 0.0 if atilde.kind == "direct" else None
    start_counters = timing.snapshot()
    t0 = time.perf_counter()
    first_res = None
    for _ in range(cfg.max_iter):
        r1 = system.apply_K(u) - system.apply_Abd(p) - f
        dp = atilde.apply_inverse(r1)
        p = p + dp
        z = f - system.apply_Kt(p) - (
            system.apply_K(u) + system.apply_Kt(u) + system.apply_Abd(u)
        )
        y = htilde.apply_inverse(z)
        u = u + cfg.omega * y

        res = float(np.sqrt(max(np.sum(r1 * dp) + np.sum(z * y), 0.0))) / ref
        if first_res is None:
            first_res = max(res, 1e-300)
        s_err = None
        d_err = None
        if diagnostics:
            s_err = system.s_norm(u - u_star) / s_norm_ref
            if record_d:
                d_err = d_norm(
                    p + u_star, u - u_star, cfg.omega, rho_a_for_d,
                    atilde.forward, htilde.apply,
                )
        counters = timing.snapshot()
        hist.append(
            res,
            s_err,
            d_err,
            time.perf_counter() - t0,
            counters["fft"] - start_counters["fft"],
            counters["spatial"] - start_counters["spatial"],
        )
        if res > 1e6 * first_res:
            raise SolverDivergenceError(
                f"residual grew to {res:.3e} from {first_res:.3e}"
            )
        if cfg.stopping == "preconditioned_residual" and res < cfg.tol:
            hist.converged = True
            break
        if cfg.stopping == "s_norm_error" and s_err is not None and s_err < cfg.tol:
            hist.converged = True
            break
    return (p, u), hist


def minres_solve(
    system: TimeGlobalSystem,
    atilde: BlockDiagSolver,
    htilde: SchurPreconditioner,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> tuple[tuple[np.ndarray, np.ndarray], ConvergenceHistory]:
    """Block-diagonally preconditioned MINRES on the saddle-point system."""
    spec = system.spec
    nd = spec.N * spec.dim
    f = system.rhs
    g = np.concatenate([-f.ravel(), -f.ravel()])

    def matvec(w: np.ndarray) -> np.ndarray:
        p = w[:nd].reshape(spec.N, spec.dim)
        u = w[nd:].reshape(spec.N, spec.dim)
        top, bottom = system.apply_saddle(p, u)
        return np.concatenate([top.ravel(), bottom.ravel()])

    def precond(w: np.ndarray) -> np.ndarray:
        p = w[:nd].reshape(spec.N, spec.dim)
        u = w[nd:].reshape(spec.N, spec.dim)
        return np.concatenate(
            [atilde.apply_inverse(p).ravel(), htilde.apply_inverse(u).ravel()]
        )

    # cheap positivity probe of the preconditioner
    rng = np.random.default_rng(1234)
    for _ in range(3):
        w = rng.standard_normal(2 * nd)
        if w @ precond(w) <= 0.0:
            raise NotSpdError("block preconditioner is not positive definite")

    op = spla.LinearOperator((2 * nd, 2 * nd), matvec=matvec)
    mop = spla.LinearOperator((2 * nd, 2 * nd), matvec=precond)

    hist = ConvergenceHistory()
    start_counters = timing.snapshot()
    t0 = time.perf_counter()
    ref = float(np.sqrt(g @ precond(g)))
    if ref == 0.0:
        hist.converged = True
        z = np.zeros((spec.N, spec.dim))
        return (z, z.copy()), hist

    def callback(xk: np.ndarray) -> None:
        r = g - matvec(xk)
        res = float(np.sqrt(max(r @ precond(r), 0.0))) / ref
        counters = timing.snapshot()
        hist.append(
            res, None, None,
            time.perf_counter() - t0,
            counters["fft"] - start_counters["fft"],
            counters["spatial"] - start_counters["spatial"],
        )

    w, info = spla.minres(op, g, M=mop, rtol=tol, maxiter=max_iter, callback=callback)
    hist.converged = info == 0
    p = w[:nd].reshape(spec.N, spec.dim)
    u = w[nd:].reshape(spec.N, spec.dim)
    return (p, u), hist
