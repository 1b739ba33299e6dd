"""Linear SPD approximate inverses for the spatial operators.

Three kinds: exact direct solves, damped Jacobi sweeps, and symmetric
geometric multigrid V-cycles on the structured 1d/2d meshes.  Every kind
realizes one application of a fixed symmetric positive definite linear
operator (never a tolerance-driven iteration), so the induced block
preconditioners stay SPD.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .linalg import (
    SpatialMatrix,
    SpdFactor,
    lanczos_extremal_eig,
)
from . import timing


class SpatialSolver:
    """Approximate inverse of an SPD spatial operator."""

    target: SpatialMatrix

    def apply(self, b: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x: np.ndarray) -> np.ndarray:
        """Forward application of the implied preconditioner matrix.

        Only exact solvers expose this; it is needed by diagnostic norms.
        """
        raise InputError(f"{type(self).__name__} has no forward operator")


class DirectSolver(SpatialSolver):
    def __init__(self, target: SpatialMatrix):
        self.target = target
        with timing.timed("spatial"):
            self._factor = SpdFactor(target)

    def apply(self, b: np.ndarray) -> np.ndarray:
        with timing.timed("spatial"):
            return self._factor.solve(b)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.target.dot(x)


class JacobiSolver(SpatialSolver):
    """Fixed number of damped Jacobi sweeps from a zero initial guess."""

    def __init__(self, target: SpatialMatrix, sweeps: int = 1, damping: float = 2.0 / 3.0):
        if sweeps < 1:
            raise InputError("need at least one sweep")
        self.target = target
        self.sweeps = sweeps
        self.damping = damping
        self._dinv = damping / target.diagonal()

    def apply(self, b: np.ndarray) -> np.ndarray:
        with timing.timed("spatial"):
            x = self._dinv * b
            for _ in range(self.sweeps - 1):
                x += self._dinv * (b - self.target.dot(x))
            return x


def _prolongation_1d(coarse_cells: int) -> sp.csr_matrix:
    """Linear interpolation from (c-1) to (2c-1) interior nodes."""
    fine_dim = 2 * coarse_cells - 1
    coarse_dim = coarse_cells - 1
    p = sp.lil_matrix((fine_dim, coarse_dim))
    for j in range(coarse_dim):
        p[2 * j + 1, j] = 1.0
        p[2 * j, j] = 0.5
        p[2 * j + 2, j] = 0.5
    return p.tocsr()


@dataclass
class MgHierarchy:
    """Grid transfer operators shared by all operators on one mesh family."""

    space: str
    cells: list[int]  # fine to coarse
    prolongations: list[sp.csr_matrix]  # fine to coarse, len(cells) - 1

    @property
    def levels(self) -> int:
        return len(self.cells)


def build_mg_hierarchy(space: str, fine_cells: int) -> MgHierarchy:
    """Coarsen by factor two down to at most 3 cells (per side)."""
    if fine_cells < 4 or fine_cells & (fine_cells - 1):
        raise InputError("fine cell count must be a power of two, at least 4")
    cells = [fine_cells]
    while cells[-1] // 2 >= 2 and cells[-1] > 3:
        cells.append(cells[-1] // 2)
    prolongations = []
    for c in cells[1:]:
        p1 = _prolongation_1d(c)
        prolongations.append(p1 if space == "1d" else sp.kron(p1, p1).tocsr())
    if space not in ("1d", "2d"):
        raise InputError(f"unknown space {space!r}")
    return MgHierarchy(space=space, cells=cells, prolongations=prolongations)


class MgVCycleSolver(SpatialSolver):
    """Symmetric geometric multigrid V-cycles with damped Jacobi smoothing.

    Galerkin coarse operators; equal pre- and post-smoothing so that the
    realized operator is symmetric positive definite.
    """

    def __init__(
        self,
        target: SpatialMatrix,
        hierarchy: MgHierarchy,
        cycles: int = 1,
        smooth_steps: int = 1,
        damping: float | None = None,
    ):
        self.target = target
        self.hierarchy = hierarchy
        self.cycles = cycles
        self.smooth_steps = smooth_steps
        if damping is None:
            damping = 2.0 / 3.0 if hierarchy.space == "1d" else 4.0 / 5.0
        self.damping = damping
        ops = [target.tocsr()]
        for p in hierarchy.prolongations:
            ops.append((p.T @ ops[-1] @ p).tocsr())
        self._ops = ops
        self._dinv = [damping / np.asarray(a.diagonal()) for a in ops]
        self._coarse = SpdFactor(SpatialMatrix.from_sparse(ops[-1]))

    def level_operator(self, level: int) -> sp.csr_matrix:
        return self._ops[level]

    def _vcycle(self, level: int, b: np.ndarray) -> np.ndarray:
        if level == len(self._ops) - 1:
            return self._coarse.solve(b)
        a = self._ops[level]
        dinv = self._dinv[level]
        x = dinv * b
        for _ in range(self.smooth_steps - 1):
            x += dinv * (b - a.dot(x))
        p = self.hierarchy.prolongations[level]
        r = b - a.dot(x)
        x = x + p.dot(self._vcycle(level + 1, p.T.dot(r)))
        for _ in range(self.smooth_steps):
            x += dinv * (b - a.dot(x))
        return x

    def apply(self, b: np.ndarray) -> np.ndarray:
        with timing.timed("spatial"):
            x = self._vcycle(0, b)
            a = self._ops[0]
            for _ in range(self.cycles - 1):
                x += self._vcycle(0, b - a.dot(x))
            return x


def make_solver(target: SpatialMatrix, kind: str, hierarchy: MgHierarchy | None = None,
                **opts) -> SpatialSolver:
    """Solver factory: kind in {direct, jacobi, mg}."""
    if kind == "direct":
        return DirectSolver(target)
    if kind == "jacobi":
        return JacobiSolver(target, **opts)
    if kind == "mg":
        if hierarchy is None:
            raise InputError("mg solver needs a grid hierarchy")
        return MgVCycleSolver(target, hierarchy, **opts)
    raise InputError(f"unknown solver kind {kind!r}")


def estimate_rho_A(
    a: SpatialMatrix, solver: SpatialSolver, iters: int = 200, seed: int = 0
) -> float:
    """Contraction quality of the preconditioner in its own energy norm.

    Equals max |1 - lambda| over the spectrum of the preconditioned operator,
    which is self-adjoint in the target's inner product; estimated by Lanczos
    and therefore converging from below.
    """
    rng = np.random.default_rng(seed)
    res = lanczos_extremal_eig(
        lambda x: solver.apply(a.dot(x)),
        lambda x: a.dot(x),
        rng.standard_normal(a.dim),
        iters,
    )
    return max(abs(1.0 - res.lam_min), abs(1.0 - res.lam_max))


def estimate_gamma_Gamma(
    h_k: SpatialMatrix,
    solver: SpatialSolver,
    a: SpatialMatrix,
    iters: int = 200,
    seed: int = 0,
) -> tuple[float, float]:
    """Extremal eigenvalues of the squared-preconditioner pencil.

    Returns the extremal generalized eigenvalues comparing H_k A^-1 H_k
    against its approximation built from the solver; (1, 1) for exact solves.
    """
    a_factor = SpdFactor(a)

    def weight(x: np.ndarray) -> np.ndarray:  # exact H A^-1 H
        return h_k.dot(a_factor.solve(h_k.dot(x)))

    def op(x: np.ndarray) -> np.ndarray:  # approx-inverse times exact
        y = weight(x)
        return solver.apply(a.dot(solver.apply(y)))

    rng = np.random.default_rng(seed)
    res = lanczos_extremal_eig(op, weight, rng.standard_normal(h_k.dim), iters)
    return res.lam_min, res.lam_max


def materialize_inverse(solver: SpatialSolver, dim: int) -> np.ndarray:
    """Dense matrix of the solver operator (small-dimension test oracle)."""
    return np.column_stack([solver.apply(e) for e in np.eye(dim)])
