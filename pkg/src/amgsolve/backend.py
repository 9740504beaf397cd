"""Solve-phase primitives.

Smoothers and Krylov solvers talk to vectors and matrices only through a
backend object, so an alternative backend only has to provide the methods of
:class:`Backend`. The builtin implementation runs compiled kernels over row
ranges, optionally on a pool of worker threads.

Reductions are computed over fixed-size blocks and the partial sums are
combined with an exactly rounded sum. The block size does not depend on the
worker count, so ``dot`` and ``norm2`` return bit-identical results for any
number of workers.
"""
from __future__ import annotations

import math
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import _kernels
from .sparse import CSRMatrix, DimensionError, identity

__all__ = ["Backend", "Builtin", "default_backend"]

REDUCTION_BLOCK = 4096
# below this many rows per call the pool is not worth the dispatch
MIN_PARALLEL_ROWS = 32768


class Backend(ABC):
    """Primitive set used during the solve phase."""

    dtype: np.dtype

    @abstractmethod
    def vector(self, n: int) -> np.ndarray: ...

    @abstractmethod
    def spmv(self, alpha, A, x, beta, y) -> None:
        """``y <- alpha*A*x + beta*y``"""

    @abstractmethod
    def residual(self, A, x, f, r) -> None:
        """``r <- f - A*x``"""

    @abstractmethod
    def dot(self, x, y) -> float: ...

    def norm2(self, x) -> float:
        return math.sqrt(self.dot(x, x))

    @abstractmethod
    def axpby(self, a, x, b, y) -> None:
        """``y <- a*x + b*y``"""

    @abstractmethod
    def axpbypcz(self, a, x, b, y, c, z) -> None:
        """``z <- a*x + b*y + c*z``"""

    @abstractmethod
    def vmul(self, a, d, x, b, y) -> None:
        """``y <- a*(d∘x) + b*y``"""

    def copy(self, x, y) -> None:
        self.axpby(1.0, x, 0.0, y)

    def set_zero(self, x) -> None:
        x.fill(0)


def _check_len(*vs):
    n = vs[0].shape[0]
    for v in vs[1:]:
        if v.shape[0] != n:
            raise DimensionError(f"vector lengths differ: {[w.shape[0] for w in vs]}")
    return n


class Builtin(Backend):
    """Shared-memory backend over numpy arrays.

    Parameters
    ----------
    workers : int
        Number of threads that split row ranges. ``1`` runs everything on
        the calling thread.
    dtype : numpy dtype
        Scalar type of the vectors handed out by :meth:`vector`.
    """

    def __init__(self, workers: int = 1, dtype=np.float64):
        if workers < 1:
            raise ValueError("workers must be >= 1")
        self.workers = int(workers)
        self.dtype = np.dtype(dtype)
        self._pool = ThreadPoolExecutor(workers) if workers > 1 else None

    def __repr__(self):
        return f"Builtin(workers={self.workers}, dtype={self.dtype.name})"

    def warm_up(self) -> None:
        """Call every solve-phase kernel once on a tiny problem so numba's
        one-off compile or cache load is not charged to a timed phase."""
        A = identity(2, self.dtype)
        x, y, z = self.vector(2), self.vector(2), self.vector(2)
        self.spmv(1.0, A, x, 0.0, y)
        self.residual(A, x, y, z)
        self.dot(x, y)
        self.axpby(1.0, x, 1.0, y)
        self.axpbypcz(1.0, x, 1.0, y, 1.0, z)
        self.vmul(1.0, x, y, 0.0, z)

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _ranges(self, n, work):
        if self._pool is None or work < MIN_PARALLEL_ROWS:
            return [(0, n)]
        bounds = np.linspace(0, n, self.workers + 1).astype(np.int64)
        return [(lo, hi) for lo, hi in zip(bounds[:-1], bounds[1:]) if hi > lo]

    def _run(self, kernel, n, *args, work=None):
        ranges = self._ranges(n, n if work is None else work)
        if len(ranges) == 1:
            kernel(*args, 0, n)
            return
        futures = [self._pool.submit(kernel, *args, lo, hi) for lo, hi in ranges]
        for fut in futures:
            fut.result()

    def vector(self, n: int) -> np.ndarray:
        return np.zeros(n, dtype=self.dtype)

    def spmv(self, alpha, A: CSRMatrix, x, beta, y) -> None:
        if A.ncols != x.shape[0] or A.nrows != y.shape[0]:
            raise DimensionError(f"spmv: {A.shape} with x[{x.shape[0]}], y[{y.shape[0]}]")
        self._run(_kernels.spmv_range, A.nrows, alpha, A.row_ptr, A.col_idx,
                  A.values, x, beta, y)

    def residual(self, A: CSRMatrix, x, f, r) -> None:
        if A.ncols != x.shape[0] or A.nrows != f.shape[0] or r.shape[0] != f.shape[0]:
            raise DimensionError(f"residual: {A.shape} with x[{x.shape[0]}], f[{f.shape[0]}]")
        self._run(_kernels.residual_range, A.nrows, A.row_ptr, A.col_idx, A.values,
                  x, f, r)

    def dot(self, x, y) -> float:
        n = _check_len(x, y)
        nblocks = max(1, -(-n // REDUCTION_BLOCK))
        partial = np.zeros(nblocks, dtype=np.float64)
        self._run(_kernels.block_dots, nblocks, x, y, REDUCTION_BLOCK, partial, work=n)
        return math.fsum(partial)

    def axpby(self, a, x, b, y) -> None:
        n = _check_len(x, y)
        self._run(_kernels.axpby_range, n, a, x, b, y)

    def axpbypcz(self, a, x, b, y, c, z) -> None:
        n = _check_len(x, y, z)
        self._run(_kernels.axpbypcz_range, n, a, x, b, y, c, z)

    def vmul(self, a, d, x, b, y) -> None:
        n = _check_len(d, x, y)
        self._run(_kernels.vmul_range, n, a, d, x, b, y)

    def copy(self, x, y) -> None:
        _check_len(x, y)
        np.copyto(y, x)


_DEFAULT = None


def default_backend() -> Builtin:
    """Single-worker double-precision backend shared by default."""
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = Builtin()
    return _DEFAULT
