"""Blockwise discrete sine transforms over the time index.

The forward transform is the type-III DST with a half weight on the final
time block,

    uhat_k = (2/N) * sum_n (1 + delta_nN)^-1 u_n sin((2k-1) n pi / (2N)),

and its inverse is the plain type-II DST,

    u_n = sum_k uhat_k sin((2k-1) n pi / (2N)).

Transforms act along axis 0 of an (N, dim) block vector, component-wise
over the spatial dimension.  The fast path (power-of-two N) maps these to
the standard real fast transforms; other lengths fall back to a dense
precomputed kernel.
"""

from __future__ import annotations

import numpy as np
import scipy.fft

from .errors import DimensionMismatchError
from . import timing


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


class DstPlan:
    """Reusable transform plan for a fixed number of time blocks."""

    def __init__(self, N: int):
        if N < 1:
            raise DimensionMismatchError("transform length must be >= 1")
        self.N = N
        self.fast = _is_pow2(N)
        self._kernel: np.ndarray | None = None

    def kernel(self) -> np.ndarray:
        """Dense (N, N) table sin((2k-1) n pi / (2N)), k rows, n columns."""
        if self._kernel is None:
            k = np.arange(1, self.N + 1)[:, None]
            n = np.arange(1, self.N + 1)[None, :]
            self._kernel = np.sin((2 * k - 1) * n * np.pi / (2 * self.N))
        return self._kernel

    def _check(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape[0] != self.N:
            raise DimensionMismatchError(
                f"block count {u.shape[0]} does not match plan length {self.N}"
            )
        return u

    def forward(self, u: np.ndarray) -> np.ndarray:
        """Apply the weighted type-III DST (the analysis map)."""
        u = self._check(u)
        with timing.timed("fft"):
            if self.fast:
                return scipy.fft.dst(u, type=3, axis=0) / self.N
            w = u.copy()
            w[-1] *= 0.5
            return (2.0 / self.N) * np.tensordot(self.kernel(), w, axes=(1, 0))

    def inverse(self, uhat: np.ndarray) -> np.ndarray:
        """Apply the type-II DST (the synthesis map)."""
        uhat = self._check(uhat)
        with timing.timed("fft"):
            if self.fast:
                return scipy.fft.dst(uhat, type=2, axis=0) / 2.0
            return np.tensordot(self.kernel().T, uhat, axes=(1, 0))

    def forward_transpose(self, v: np.ndarray) -> np.ndarray:
        v = self._check(v)
        with timing.timed("fft"):
            if self.fast:
                out = scipy.fft.dst(v, type=2, axis=0) / self.N
                out[-1] *= 0.5
                return out
            out = (2.0 / self.N) * np.tensordot(self.kernel().T, v, axes=(1, 0))
            out[-1] *= 0.5
            return out

    def inverse_transpose(self, u: np.ndarray) -> np.ndarray:
        u = self._check(u)
        with timing.timed("fft"):
            if self.fast:
                w = u.copy()
                w[-1] *= 2.0
                return scipy.fft.dst(w, type=3, axis=0) / 2.0
            return np.tensordot(self.kernel(), u, axes=(1, 0))

    # dense matrix representations, used by test oracles only
    def forward_matrix(self) -> np.ndarray:
        w = np.ones(self.N)
        w[-1] = 0.5
        return (2.0 / self.N) * self.kernel() * w[None, :]

    def inverse_matrix(self) -> np.ndarray:
        return self.kernel().T


def dst_forward(plan: DstPlan, u: np.ndarray) -> np.ndarray:
    return plan.forward(u)


def dst_inverse(plan: DstPlan, uhat: np.ndarray) -> np.ndarray:
    return plan.inverse(uhat)


def dst_forward_transpose(plan: DstPlan, v: np.ndarray) -> np.ndarray:
    return plan.forward_transpose(v)


def dst_inverse_transpose(plan: DstPlan, u: np.ndarray) -> np.ndarray:
    return plan.inverse_transpose(u)
