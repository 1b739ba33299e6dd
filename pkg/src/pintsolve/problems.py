"""Discrete model problems: heat equations on uniform 1d/2d meshes.

Assembles P1 mass/stiffness pairs with homogeneous Dirichlet boundary
(interior unknowns only), builds uniform or seeded quasi-uniform time grids,
and measures the quasi-uniformity constant of the resulting problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatchError, InputError
from .linalg import (
    SpatialMatrix,
    dense_generalized_eig_extremal,
    DEFAULT_DENSE_EIG_LIMIT,
)


@dataclass(frozen=True)
class TimeGrid:
    """Partition of (0, T) into N steps; nodes[0] = 0, nodes[N] = T."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        object.__setattr__(self, "nodes", nodes)
        if nodes[0] != 0.0:
            raise InputError("time grid must start at t = 0")
        steps = np.diff(nodes)
        if np.any(steps <= 0.0):
            raise InputError("time-step lengths must be positive")

    @property
    def N(self) -> int:
        return len(self.nodes) - 1

    @property
    def T(self) -> float:
        return float(self.nodes[-1])

    @property
    def steps(self) -> np.ndarray:
        return np.diff(self.nodes)


def build_time_grid(
    kind: str, N: int, T: float, perturbation: float = 0.0, seed: int = 0
) -> TimeGrid:
    """Uniform grid, or a seeded quasi-uniform perturbation of it.

    Perturbed steps are proportional to 1 + perturbation * xi_n with
    xi_n uniform on [-1, 1] from a deterministic generator, rescaled to sum T.
    """
    if N < 1:
        raise InputError("need at least one time-step")
    if T <= 0.0:
        raise InputError("final time must be positive")
    if kind == "uniform":
        raw = np.ones(N)
    elif kind == "perturbed":
        if not 0.0 <= perturbation < 1.0:
            raise InputError("perturbation must lie in [0, 1)")
        xi = np.random.default_rng(seed).uniform(-1.0, 1.0, N)
        raw = 1.0 + perturbation * xi
    else:
        raise InputError(f"unknown time grid kind {kind!r}")
    steps = T * raw / raw.sum()
    return TimeGrid(np.concatenate([[0.0], np.cumsum(steps)]))


def assemble_mass_stiffness_1d(num_cells: int) -> tuple[SpatialMatrix, SpatialMatrix]:
    """P1 mass and stiffness on (0,1), homogeneous Dirichlet, uniform mesh."""
    if num_cells < 2:
        raise InputError("need at least 2 cells")
    h = 1.0 / num_cells
    dim = num_cells - 1
    main = np.arange(dim)
    off = np.arange(dim - 1)
    rows = np.concatenate([main, off])
    cols = np.concatenate([main, off + 1])
    m_vals = np.concatenate([np.full(dim, 4 * h / 6), np.full(dim - 1, h / 6)])
    a_vals = np.concatenate([np.full(dim, 2.0 / h), np.full(dim - 1, -1.0 / h)])
    return SpatialMatrix(dim, rows, cols, m_vals), SpatialMatrix(dim, rows, cols, a_vals)


# P1 element matrices on a right triangle with legs h (vertices ordered so the
# right angle is at the first vertex): stiffness is h-independent.
_STIFF_EL = 0.5 * np.array([[2.0, -1.0, -1.0], [-1.0, 1.0, 0.0], [-1.0, 0.0, 1.0]])
_MASS_EL = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0


def assemble_mass_stiffness_2d(cells_per_side: int) -> tuple[SpatialMatrix, SpatialMatrix]:
    """P1 mass/stiffness on the unit square, structured triangulation.

    Each grid cell is split along the diagonal from its lower-left to its
    upper-right corner; homogeneous Dirichlet unknowns are the interior nodes.
    """
    if cells_per_side < 2:
        raise InputError("need at least 2 cells per side")
    c = cells_per_side
    h = 1.0 / c
    nn = (c + 1) * (c + 1)

    def node(i: int, j: int) -> int:
        return j * (c + 1) + i

    tris = []
    for j in range(c):
        for i in range(c):
            ll, lr = node(i, j), node(i + 1, j)
            ul, ur = node(i, j + 1), node(i + 1, j + 1)
            # right angles at lr and ul; both triangles share the ll-ur diagonal
            tris.append((lr, ur, ll))
            tris.append((ul, ll, ur))
    rows, cols, m_vals, a_vals = [], [], [], []
    area = 0.5 * h * h
    for tri in tris:
        for a in range(3):
            for b in range(3):
                rows.append(tri[a])
                cols.append(tri[b])
                a_vals.append(_STIFF_EL[a, b])
                m_vals.append(area * _MASS_EL[a, b])
    mass_full = sp.coo_matrix((m_vals, (rows, cols)), shape=(nn, nn)).tocsr()
    stiff_full = sp.coo_matrix((a_vals, (rows, cols)), shape=(nn, nn)).tocsr()
    interior = np.array(
        [node(i, j) for j in range(1, c) for i in range(1, c)], dtype=np.int64
    )
    mass = mass_full[np.ix_(interior, interior)]
    stiff = stiff_full[np.ix_(interior, interior)]
    return SpatialMatrix.from_sparse(mass), SpatialMatrix.from_sparse(stiff)


def interior_nodes_1d(num_cells: int) -> np.ndarray:
    return np.arange(1, num_cells) / num_cells


def interior_nodes_2d(cells_per_side: int) -> tuple[np.ndarray, np.ndarray]:
    """Interior node coordinates (x, y), ordered to match the assembly."""
    c = cells_per_side
    g = np.arange(1, c) / c
    xx, yy = np.meshgrid(g, g)  # rows iterate y, matching node numbering
    return xx.ravel(), yy.ravel()


@dataclass
class ProblemSpec:
    """Fully assembled discrete parabolic problem."""

    mass: SpatialMatrix
    stiffness: list[SpatialMatrix]  # per-step operators, length N
    grid: TimeGrid
    load: np.ndarray  # shape (N, dim), load vector per step
    u_init: np.ndarray  # shape (dim,)
    tau_ref: float
    a_ref: SpatialMatrix
    alpha: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        dim = self.mass.dim
        if any(a.dim != dim for a in self.stiffness):
            raise DimensionMismatchError("stiffness dimension mismatch")
        if len(self.stiffness) != self.grid.N:
            raise DimensionMismatchError("need one stiffness operator per step")
        if self.load.shape != (self.grid.N, dim) or self.u_init.shape != (dim,):
            raise DimensionMismatchError("data dimension mismatch")

    @property
    def dim(self) -> int:
        return self.mass.dim

    @property
    def N(self) -> int:
        return self.grid.N


def compute_alpha(
    mass: SpatialMatrix,
    stiffness: Sequence[SpatialMatrix],
    grid: TimeGrid,
    tau_ref: float,
    a_ref: SpatialMatrix,
    dense_limit: int = DEFAULT_DENSE_EIG_LIMIT,
) -> float:
    """Smallest alpha with (1/alpha) tau*A <= tau_n*A_n <= alpha * tau*A.

    Proportional operators (the common time-dependent-coefficient case) are
    handled exactly; otherwise the extremal generalized eigenvalues of each
    pencil are computed densely.
    """
    alpha = 1.0
    steps = grid.steps
    cache: dict[int, tuple[float, float]] = {}
    for n, a_n in enumerate(stiffness):
        s = a_n.proportionality(a_ref)
        if s is not None:
            lo = hi = s * steps[n] / tau_ref
        else:
            key = id(a_n)
            if key not in cache:
                cache[key] = dense_generalized_eig_extremal(
                    a_n.todense(), a_ref.todense(), dense_limit
                )
            lo, hi = cache[key]
            lo *= steps[n] / tau_ref
            hi *= steps[n] / tau_ref
        alpha = max(alpha, hi, 1.0 / lo)
    return float(alpha)


def _sine_vector_1d(num_cells: int) -> np.ndarray:
    return np.sin(np.pi * interior_nodes_1d(num_cells))


def _sine_vector_2d(cells_per_side: int) -> np.ndarray:
    x, y = interior_nodes_2d(cells_per_side)
    return np.sin(np.pi * x) * np.sin(np.pi * y)


def make_heat_problem(
    space: str,
    mesh: int,
    grid: TimeGrid,
    coeff: Callable[[float], float] | None = None,
    data: str = "sine",
    tau_ref: float | None = None,
    a_ref: SpatialMatrix | None = None,
    seed: int = 0,
) -> ProblemSpec:
    """Heat problem with optional time-dependent diffusion coefficient.

    data: "sine" (zero forcing, product-of-sines initial condition),
    "zero" (all-zero data), "manufactured" (decaying-sine exact-solution
    load with sine initial condition), or "random" (seeded random data).

    Default reference pair: tau_ref is the geometric mean of the step sizes
    and a_ref is the mid-interval operator A_{ceil(N/2)}.
    """
    if space == "1d":
        mass, a_base = assemble_mass_stiffness_1d(mesh)
        sine = _sine_vector_1d(mesh)
    elif space == "2d":
        mass, a_base = assemble_mass_stiffness_2d(mesh)
        sine = _sine_vector_2d(mesh)
    else:
        raise InputError(f"unknown space {space!r}")
    N, dim = grid.N, mass.dim
    if coeff is None:
        coeff = lambda t: 1.0  # noqa: E731
    c_vals = np.array([coeff(t) for t in grid.nodes[1:]], dtype=np.float64)
    if np.any(c_vals <= 0.0):
        raise InputError("diffusion coefficient must be positive")
    stiffness = [a_base if c == 1.0 else a_base.scaled(float(c)) for c in c_vals]

    if data == "sine":
        u_init = sine.copy()
        load = np.zeros((N, dim))
    elif data == "zero":
        u_init = np.zeros(dim)
        load = np.zeros((N, dim))
    elif data == "manufactured":
        # load of the exact solution w(t) * sine with w(t) = exp(-t)
        u_init = sine.copy()
        t = grid.nodes[1:]
        w = np.exp(-t)
        load = np.outer(-w, mass.dot(sine)) + (c_vals * w)[:, None] * a_base.dot(sine)
    elif data == "random":
        rng = np.random.default_rng(seed)
        u_init = rng.standard_normal(dim)
        load = rng.standard_normal((N, dim))
    else:
        raise InputError(f"unknown data descriptor {data!r}")

    if tau_ref is None:
        tau_ref = float(np.exp(np.mean(np.log(grid.steps))))
    if a_ref is None:
        a_ref = stiffness[math.ceil(N / 2) - 1]
    alpha = compute_alpha(mass, stiffness, grid, tau_ref, a_ref)
    return ProblemSpec(
        mass=mass,
        stiffness=stiffness,
        grid=grid,
        load=load,
        u_init=u_init,
        tau_ref=tau_ref,
        a_ref=a_ref,
        alpha=alpha,
        meta={"space": space, "mesh": mesh, "data": data, "seed": seed},
    )


# --- plain-text serialization -------------------------------------------------
#
# Format (see README): a header line "pintsolve-problem 1", then sections:
#   grid <N> <T>            followed by N+1 node lines
#   scalars <tau_ref> <alpha>
#   matrix <name> <dim> <nnz>  followed by nnz upper-triangle "i j value" lines
#   stepscales <N>          per-step multiple of the base stiffness (one/line)
#   vector <name> <len>     followed by len value lines
# Matrices written: M, A_ref, and A_base when all A_n are multiples of it
# (otherwise each A_n is written as "matrix A_<n> ...").


def _write_matrix(fh, name: str, m: SpatialMatrix) -> None:
    fh.write(f"matrix {name} {m.dim} {len(m.vals)}\n")
    for i, j, v in zip(m.rows, m.cols, m.vals):
        fh.write(f"{i} {j} {float(v)!r}\n")


def _write_vector(fh, name: str, v: np.ndarray) -> None:
    fh.write(f"vector {name} {len(v)}\n")
    for x in v:
        fh.write(f"{float(x)!r}\n")


def save_problem(spec: ProblemSpec, path: str) -> None:
    scales = [a.proportionality(spec.a_ref) for a in spec.stiffness]
    proportional = all(s is not None for s in scales)
    with open(path, "w") as fh:
        fh.write("pintsolve-problem 1\n")
        fh.write(f"grid {spec.N} {float(spec.grid.T)!r}\n")
        for t in spec.grid.nodes:
            fh.write(f"{float(t)!r}\n")
        fh.write(f"scalars {float(spec.tau_ref)!r} {float(spec.alpha)!r}\n")
        _write_matrix(fh, "M", spec.mass)
        _write_matrix(fh, "A_ref", spec.a_ref)
        if proportional:
            fh.write(f"stepscales {spec.N}\n")
            for s in scales:
                fh.write(f"{float(s)!r}\n")
        else:
            for n, a_n in enumerate(spec.stiffness):
                _write_matrix(fh, f"A_{n + 1}", a_n)
        _write_vector(fh, "u_init", spec.u_init)
        for n in range(spec.N):
            _write_vector(fh, f"f_{n + 1}", spec.load[n])


def load_problem(path: str) -> ProblemSpec:
    with open(path) as fh:
        lines = iter(fh.read().splitlines())
    if next(lines) != "pintsolve-problem 1":
        raise InputError("unrecognized problem file header")
    tok = next(lines).split()
    assert tok[0] == "grid"
    N = int(tok[1])
    nodes = np.array([float(next(lines)) for _ in range(N + 1)])
    tok = next(lines).split()
    assert tok[0] == "scalars"
    tau_ref, alpha = float(tok[1]), float(tok[2])
    matrices: dict[str, SpatialMatrix] = {}
    vectors: dict[str, np.ndarray] = {}
    scales: np.ndarray | None = None
    for line in lines:
        tok = line.split()
        if tok[0] == "matrix":
            name, dim, nnz = tok[1], int(tok[2]), int(tok[3])
            rows, cols, vals = [], [], []
            for _ in range(nnz):
                i, j, v = next(lines).split()
                rows.append(int(i))
                cols.append(int(j))
                vals.append(float(v))
            matrices[name] = SpatialMatrix(dim, rows, cols, vals)
        elif tok[0] == "stepscales":
            scales = np.array([float(next(lines)) for _ in range(int(tok[1]))])
        elif tok[0] == "vector":
            name, length = tok[1], int(tok[2])
            vectors[name] = np.array([float(next(lines)) for _ in range(length)])
        else:
            raise InputError(f"unrecognized section {tok[0]!r}")
    a_ref = matrices["A_ref"]
    if scales is not None:
        stiffness = [a_ref.scaled(float(s)) for s in scales]
    else:
        stiffness = [matrices[f"A_{n + 1}"] for n in range(N)]
    load = np.stack([vectors[f"f_{n + 1}"] for n in range(N)])
    return ProblemSpec(
        mass=matrices["M"],
        stiffness=stiffness,
        grid=TimeGrid(nodes),
        load=load,
        u_init=vectors["u_init"],
        tau_ref=tau_ref,
        a_ref=a_ref,
        alpha=alpha,
    )
