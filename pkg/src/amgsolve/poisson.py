"""Finite-difference Poisson problem on the unit cube."""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .sparse import CSRMatrix, INDEX

__all__ = ["ProblemBundle", "SizingError", "generate_poisson", "poisson_nnz"]


class SizingError(ValueError):
    pass


@dataclass(frozen=True)
class ProblemBundle:
    A: CSRMatrix
    rhs: np.ndarray
    solution: np.ndarray | None = None

    def __post_init__(self):
        if self.rhs.shape[0] != self.A.nrows:
            raise ValueError("rhs length does not match the matrix")


def poisson_nnz(n: int) -> int:
    return 7 * n**3 - 6 * n**2


def _available_bytes():
    try:
        return os.sysconf("SC_PHYS_PAGES") * os.sysconf("SC_PAGE_SIZE")
    except (ValueError, OSError, AttributeError):
        return None


def generate_poisson(n: int, dtype=np.float64) -> ProblemBundle:
    """7-point discretisation of ``-lap u = 1`` on ``n^3`` interior nodes of
    the unit cube with homogeneous Dirichlet boundaries.

    Boundary nodes are eliminated, so the matrix has ``n^3`` rows and
    ``7 n^3 - 6 n^2`` nonzeros. Entries are scaled by ``1/h^2`` with
    ``h = 1/(n+1)``.
    """
    if n < 1:
        raise SizingError(f"grid size must be >= 1, got {n}")
    rows = n**3
    nnz = poisson_nnz(n)
    # peak: 7 candidate slots per row for columns, values and mask
    need = rows * 7 * (8 + np.dtype(dtype).itemsize + 1) + nnz * (8 + 8)
    avail = _available_bytes()
    if rows > np.iinfo(INDEX).max // 8 or (avail is not None and need > avail):
        raise SizingError(f"n={n} needs about {need / 2**30:.1f} GiB")

    h2 = float(n + 1) ** 2
    i = np.arange(rows, dtype=INDEX)
    x = i % n
    y = (i // n) % n
    z = i // (n * n)
    # column offsets in increasing order, so each row comes out sorted
    offsets = np.array([-n * n, -n, -1, 0, 1, n, n * n], dtype=INDEX)
    valid = np.stack([z > 0, y > 0, x > 0, np.ones(rows, dtype=bool),
                      x < n - 1, y < n - 1, z < n - 1], axis=1)
    del x, y, z
    cols = (i[:, None] + offsets[None, :])[valid]
    vals = np.where(offsets == 0, 6.0 * h2, -h2).astype(dtype)
    vals = np.broadcast_to(vals, valid.shape)[valid]
    ptr = np.zeros(rows + 1, dtype=INDEX)
    np.cumsum(valid.sum(axis=1), out=ptr[1:])
    A = CSRMatrix(rows, rows, ptr, cols, vals)
    return ProblemBundle(A, np.ones(rows, dtype=dtype))
