"""Sparse symmetric spatial linear algebra and eigenvalue utilities.

Spatial vectors are 1-d numpy arrays of length ``dim``.  Block vectors over
the time index are 2-d arrays of shape ``(N, dim)``: row ``n`` holds the
spatial coefficient vector of time-step ``n+1``.  Saddle vectors pair two
block vectors ``(p, u)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import DimensionMismatchError, InputError, NotSpdError

DEFAULT_DENSE_EIG_LIMIT = 20_000


class SpatialMatrix:
    """Sparse symmetric operator on the spatial space.

    Only the upper triangle is stored canonically; the full operator is
    materialized once as CSR for fast products.  Instances are immutable.
    """

    __slots__ = ("dim", "rows", "cols", "vals", "_csr", "_base", "_scale")

    def __init__(self, dim: int, rows, cols, vals):
        if dim <= 0:
            raise InputError("matrix dimension must be positive")
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        # fold everything into the upper triangle, summing duplicates
        lower = rows > cols
        r = np.where(lower, cols, rows)
        c = np.where(lower, rows, cols)
        upper = sp.coo_matrix((vals, (r, c)), shape=(dim, dim)).tocsr()
        upper.sum_duplicates()
        upper = upper.tocoo()
        self.dim = int(dim)
        self.rows = upper.row
        self.cols = upper.col
        self.vals = upper.data
        strict = self.rows < self.cols
        full = sp.coo_matrix(
            (
                np.concatenate([self.vals, self.vals[strict]]),
                (
                    np.concatenate([self.rows, self.cols[strict]]),
                    np.concatenate([self.cols, self.rows[strict]]),
                ),
            ),
            shape=(dim, dim),
        )
        self._csr = full.tocsr()
        # proportionality provenance, used by compute_alpha fast path
        self._base: SpatialMatrix | None = None
        self._scale = 1.0

    @classmethod
    def from_sparse(cls, m) -> "SpatialMatrix":
        coo = sp.coo_matrix(m)
        keep = coo.row <= coo.col
        return cls(coo.shape[0], coo.row[keep], coo.col[keep], coo.data[keep])

    @classmethod
    def from_dense(cls, m) -> "SpatialMatrix":
        m = np.asarray(m, dtype=np.float64)
        if m.shape[0] != m.shape[1]:
            raise InputError("matrix must be square")
        if not np.allclose(m, m.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(m).max())):
            raise InputError("matrix must be symmetric")
        r, c = np.nonzero(np.triu(m))
        return cls(m.shape[0], r, c, m[r, c])

    @classmethod
    def identity(cls, dim: int) -> "SpatialMatrix":
        idx = np.arange(dim)
        return cls(dim, idx, idx, np.ones(dim))

    def tocsr(self) -> sp.csr_matrix:
        return self._csr

    def todense(self) -> np.ndarray:
        return self._csr.toarray()

    def diagonal(self) -> np.ndarray:
        return self._csr.diagonal()

    def dot(self, x: np.ndarray) -> np.ndarray:
        return self._csr.dot(x)

    def scaled(self, c: float) -> "SpatialMatrix":
        out = SpatialMatrix(self.dim, self.rows, self.cols, c * self.vals)
        root = self._base if self._base is not None else self
        out._base = root
        out._scale = c * self._scale
        return out

    def proportionality(self, other: "SpatialMatrix") -> float | None:
        """Return s with self == s * other when known structurally, else None."""
        a_root = self._base if self._base is not None else self
        b_root = other._base if other._base is not None else other
        if a_root is b_root:
            return self._scale / other._scale
        return None

    def __matmul__(self, x):
        return self.dot(x)


def add_matrices(a: float, x: SpatialMatrix, b: float, y: SpatialMatrix) -> SpatialMatrix:
    """Linear combination a*X + b*Y of two symmetric sparse operators."""
    if x.dim != y.dim:
        raise DimensionMismatchError("operator dimensions differ")
    return SpatialMatrix(
        x.dim,
        np.concatenate([x.rows, y.rows]),
        np.concatenate([x.cols, y.cols]),
        np.concatenate([a * x.vals, b * y.vals]),
    )


def spmv(mat: SpatialMatrix, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != mat.dim:
        raise DimensionMismatchError(
            f"operator dim {mat.dim} does not match vector dim {x.shape[-1]}"
        )
    return mat.dot(x)


def weighted_norm(mat: SpatialMatrix, x: np.ndarray) -> float:
    """Norm sqrt(x' L x) induced by an SPD operator L."""
    x = np.asarray(x, dtype=np.float64)
    q = float(x @ spmv(mat, x))
    if q < 0.0:
        if q < -1e-14 * float(x @ x):
            raise NotSpdError("negative quadratic form: operator is not SPD")
        q = 0.0
    return np.sqrt(q)


class SpdFactor:
    """Cached factorization of an SPD sparse operator.

    Uses a symmetric-mode LU without off-diagonal pivoting so that a
    non-positive pivot reliably flags a non-SPD operator.
    """

    def __init__(self, mat: SpatialMatrix):
        self.dim = mat.dim
        csc = mat.tocsr().tocsc()
        try:
            self._lu = spla.splu(
                csc,
                permc_spec="MMD_AT_PLUS_A",
                diag_pivot_thresh=0.0,
                options={"SymmetricMode": True},
            )
        except RuntimeError as exc:  # singular factor
            raise NotSpdError(f"factorization failed: {exc}") from exc
        if np.any(self._lu.U.diagonal() <= 0.0):
            raise NotSpdError("non-positive pivot: operator is not SPD")

    def solve(self, b: np.ndarray) -> np.ndarray:
        b = np.asarray(b, dtype=np.float64)
        if b.shape[0] != self.dim and b.ndim == 2 and b.shape[1] == self.dim:
            # multi-RHS convenience: rows are right-hand sides
            return self._lu.solve(b.T).T
        return self._lu.solve(b)


def cholesky_solve(mat: SpatialMatrix, b: np.ndarray) -> np.ndarray:
    """Exact solve L x = b for SPD L.  One-shot; cache SpdFactor for reuse."""
    b = np.asarray(b, dtype=np.float64)
    if b.shape[-1] != mat.dim and b.shape[0] != mat.dim:
        raise DimensionMismatchError("right-hand side dimension mismatch")
    return SpdFactor(mat).solve(b)


def dense_generalized_eig_extremal(
    a: np.ndarray,
    b: np.ndarray,
    dense_limit: int = DEFAULT_DENSE_EIG_LIMIT,
) -> tuple[float, float]:
    """Extremal eigenvalues of A x = lambda B x with A symmetric, B SPD."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n = a.shape[0]
    if n > dense_limit:
        raise InputError(
            f"dimension {n} exceeds dense limit {dense_limit}; use the Lanczos path"
        )
    if a.shape != b.shape or a.shape != (n, n):
        raise DimensionMismatchError("pencil matrices must be square of equal size")
    try:
        w = scipy.linalg.eigh(a, b, eigvals_only=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotSpdError(f"B factorization failed: {exc}") from exc
    return float(w[0]), float(w[-1])


class LanczosResult(NamedTuple):
    lam_min: float
    lam_max: float
    breakdown: bool
    iterations: int


def lanczos_extremal_eig(
    apply_a: Callable[[np.ndarray], np.ndarray],
    apply_b: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    iters: int,
    ritz_tol: float = 1e-11,
) -> LanczosResult:
    """Extremal Ritz values of an operator self-adjoint in the B inner product.

    Runs a B-orthogonal Lanczos recurrence with full reorthogonalization,
    stopping early once both extremal Ritz values have stagnated to
    ``ritz_tol`` (relative) over three consecutive steps.
    """
    if iters < 2:
        raise InputError("lanczos needs at least 2 iterations")
    shape = x0.shape
    q = x0.astype(np.float64).ravel().copy()
    # operators may return their input array unchanged (identity weight),
    # so never modify operator outputs in place without copying first
    bq = np.asarray(apply_b(q.reshape(shape)), dtype=np.float64).ravel()
    nrm = np.sqrt(q @ bq)
    if nrm == 0.0:
        raise InputError("zero start vector")
    qs = [q / nrm]
    bqs = [bq / nrm]
    alphas: list[float] = []
    betas: list[float] = []
    lo_hist: list[float] = []
    hi_hist: list[float] = []
    breakdown = False
    for j in range(iters):
        w = np.asarray(
            apply_a(qs[-1].reshape(shape)), dtype=np.float64
        ).ravel().copy()
        alphas.append(float(w @ bqs[-1]))
        # full reorthogonalization against all B-orthonormal vectors so far;
        # the first pass subtracts the alpha and beta recurrence terms.  The
        # B-image of w is recomputed afterwards: updating it incrementally
        # loses all accuracy once the reorthogonalized w is orders of
        # magnitude smaller than the original (B may be ill-conditioned).
        for _ in range(2):
            for qi, bqi in zip(qs, bqs):
                c = w @ bqi
                w -= c * qi
        bw = np.asarray(apply_b(w.reshape(shape)), dtype=np.float64).ravel()
        beta = float(np.sqrt(max(w @ bw, 0.0)))
        if beta <= 1e-13 * max(1.0, abs(alphas[-1])):
            breakdown = True
        alphas_arr = np.array(alphas)
        betas_arr = np.array(betas)
        ritz = (
            scipy.linalg.eigvalsh_tridiagonal(alphas_arr, betas_arr)
            if len(alphas) > 1
            else alphas_arr
        )
        lo_hist.append(float(ritz[0]))
        hi_hist.append(float(ritz[-1]))
        if breakdown:
            break
        if len(lo_hist) >= 4:
            ref = max(abs(lo_hist[-1]), abs(hi_hist[-1]), 1e-30)
            if all(
                abs(lo_hist[-1] - lo_hist[-1 - i]) <= ritz_tol * ref
                and abs(hi_hist[-1] - hi_hist[-1 - i]) <= ritz_tol * ref
                for i in (1, 2, 3)
            ):
                break
        if j == iters - 1:
            break
        betas.append(beta)
        qs.append(w / beta)
        bqs.append(bw / beta)
    return LanczosResult(lo_hist[-1], hi_hist[-1], breakdown, len(alphas))
