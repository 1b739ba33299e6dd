"""DST-diagonalized Schur complement preconditioner.

After the sine-transform change of temporal basis, the preconditioner is
block-diagonal: mode k carries the SPD spatial blend H_k = mu_k M + tau A
with frequency weight mu_k = 2 sin((2k-1) pi / (4N)).  One inverse
application is transform, per-mode solve-multiply-solve, inverse transform.
"""

from __future__ import annotations

import numpy as np

from .dst import DstPlan
from .errors import DimensionMismatchError, InputError
from .linalg import SpatialMatrix, SpdFactor, add_matrices
from .problems import ProblemSpec
from .spatial import MgHierarchy, SpatialSolver, build_mg_hierarchy, make_solver
from . import parallel, timing


def frequency_weights(N: int) -> np.ndarray:
    """mu_k = 2 sin((2k-1) pi / (4N)), strictly increasing and positive."""
    k = np.arange(1, N + 1)
    return 2.0 * np.sin((2 * k - 1) * np.pi / (4 * N))


class SchurPreconditioner:
    """Holds the per-mode operators and solvers; immutable after build."""

    def __init__(
        self,
        spec: ProblemSpec,
        solver_kind: str = "direct",
        hierarchy: MgHierarchy | None = None,
        **solver_opts,
    ):
        self.N = spec.N
        self.dim = spec.dim
        self.tau_ref = spec.tau_ref
        self.a_ref = spec.a_ref
        self.mu = frequency_weights(self.N)
        self.plan = DstPlan(self.N)
        self.solver_kind = solver_kind
        tau_a = spec.a_ref.scaled(spec.tau_ref)
        self.blocks: list[SpatialMatrix] = [
            add_matrices(mu_k, spec.mass, 1.0, tau_a) for mu_k in self.mu
        ]
        self.solvers: list[SpatialSolver] = [
            make_solver(h_k, solver_kind, hierarchy=hierarchy, **solver_opts)
            for h_k in self.blocks
        ]
        self._a_factor: SpdFactor | None = None  # built only for exact mode

    def _check(self, r: np.ndarray) -> np.ndarray:
        r = np.asarray(r, dtype=np.float64)
        if r.shape != (self.N, self.dim):
            raise DimensionMismatchError(
                f"expected block vector of shape {(self.N, self.dim)}, got {r.shape}"
            )
        return r

    def apply_inverse(self, r: np.ndarray) -> np.ndarray:
        """Approximate Schur-complement inverse: one preconditioner action."""
        r = self._check(r)
        rhat = self.plan.inverse_transpose(r)
        out = np.empty_like(rhat)
        scale = 2.0 * self.tau_ref / self.N

        def block(k: int) -> None:
            s = self.solvers[k]
            y = s.apply(rhat[k])
            y = self.a_ref.dot(y)
            out[k] = scale * s.apply(y)

        parallel.block_map(block, self.N)
        return self.plan.inverse(out)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """Exact forward application; only meaningful with direct solvers."""
        if self.solver_kind != "direct":
            raise InputError("forward application requires direct (exact) solvers")
        u = self._check(u)
        if self._a_factor is None:
            with timing.timed("spatial"):
                self._a_factor = SpdFactor(self.a_ref)
        uhat = self.plan.forward(u)
        out = np.empty_like(uhat)
        scale = self.N / (2.0 * self.tau_ref)

        def block(k: int) -> None:
            h_k = self.blocks[k]
            with timing.timed("spatial"):
                y = self._a_factor.solve(h_k.dot(uhat[k]))
            out[k] = scale * h_k.dot(y)

        parallel.block_map(block, self.N)
        return self.plan.forward_transpose(out)


def build_schur_preconditioner(
    spec: ProblemSpec,
    solver_kind: str = "direct",
    vcycles: int = 1,
    smooth_steps: int = 1,
    jacobi_sweeps: int = 2,
) -> SchurPreconditioner:
    """Convenience builder tying solver options to the problem's mesh."""
    if solver_kind == "mg":
        meta = spec.meta
        if "space" not in meta:
            raise InputError("mg solvers need mesh metadata on the problem")
        hierarchy = build_mg_hierarchy(meta["space"], meta["mesh"])
        return SchurPreconditioner(
            spec, "mg", hierarchy=hierarchy, cycles=vcycles, smooth_steps=smooth_steps
        )
    if solver_kind == "jacobi":
        return SchurPreconditioner(spec, "jacobi", sweeps=jacobi_sweeps)
    return SchurPreconditioner(spec, solver_kind)
