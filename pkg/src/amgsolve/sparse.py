"""CSR storage and the structural kernels used while building the hierarchy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from . import _kernels

__all__ = [
    "AssemblyError",
    "CSRMatrix",
    "DimensionError",
    "Triplet",
    "csr_from_triplets",
    "diagonal",
    "galerkin_product",
    "identity",
    "spgemm",
    "transpose",
]

INDEX = np.int64


class AssemblyError(ValueError):
    """Raised when triplets cannot be packed into a CSR matrix."""


class DimensionError(ValueError):
    """Operand shapes do not agree."""


class Triplet(NamedTuple):
    row: int
    col: int
    value: float


@dataclass(frozen=True, eq=False)
class CSRMatrix:
    """Compressed sparse row matrix.

    Columns are strictly increasing within every row and there are no
    duplicate entries. The arrays are made read-only on construction, so a
    matrix can be shared freely between threads.
    """

    nrows: int
    ncols: int
    row_ptr: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        for arr in (self.row_ptr, self.col_idx, self.values):
            arr.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nrows, self.ncols)

    @property
    def nnz(self) -> int:
        return int(self.row_ptr[-1])

    @property
    def dtype(self) -> np.dtype:
        return self.values.dtype

    def row_indices(self) -> np.ndarray:
        """Row index of every stored entry."""
        return np.repeat(np.arange(self.nrows, dtype=INDEX), np.diff(self.row_ptr))

    def astype(self, dtype) -> "CSRMatrix":
        return CSRMatrix(self.nrows, self.ncols, self.row_ptr, self.col_idx,
                         self.values.astype(dtype))

    def todense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=self.dtype)
        np.add.at(out, (self.row_indices(), self.col_idx), self.values)
        return out

    def check(self) -> None:
        """Assert the structural invariants; used by tests and readers."""
        ptr, idx = self.row_ptr, self.col_idx
        assert ptr.shape == (self.nrows + 1,)
        assert ptr[0] == 0 and ptr[-1] == idx.shape[0] == self.values.shape[0]
        assert np.all(np.diff(ptr) >= 0)
        if idx.size:
            assert idx.min() >= 0 and idx.max() < self.ncols
            d = np.diff(idx)
            starts = ptr[1:-1]
            inner = np.ones(d.shape, dtype=bool)
            inner[starts[(starts > 0) & (starts < idx.size)] - 1] = False
            assert np.all(d[inner] > 0), "columns not strictly increasing"

    @classmethod
    def from_dense(cls, dense, dtype=np.float64) -> "CSRMatrix":
        dense = np.asarray(dense, dtype=dtype)
        if dense.ndim == 1:
            dense = dense[:, None]
        rows, cols = np.nonzero(dense)
        ptr = np.zeros(dense.shape[0] + 1, dtype=INDEX)
        np.cumsum(np.bincount(rows, minlength=dense.shape[0]), out=ptr[1:])
        return cls(dense.shape[0], dense.shape[1], ptr, cols.astype(INDEX),
                   dense[rows, cols].copy())

    @classmethod
    def from_scipy(cls, m) -> "CSRMatrix":
        m = m.tocsr()
        m.sum_duplicates()
        m.sort_indices()
        return cls(m.shape[0], m.shape[1], m.indptr.astype(INDEX),
                   m.indices.astype(INDEX), m.data.copy())

    def to_scipy(self):
        from scipy.sparse import csr_matrix
        return csr_matrix((self.values, self.col_idx, self.row_ptr), shape=self.shape)

    def __repr__(self):
        return (f"CSRMatrix({self.nrows}x{self.ncols}, nnz={self.nnz}, "
                f"dtype={self.dtype})")


def identity(n: int, dtype=np.float64) -> CSRMatrix:
    return CSRMatrix(n, n, np.arange(n + 1, dtype=INDEX), np.arange(n, dtype=INDEX),
                     np.ones(n, dtype=dtype))


def diagonal(A: CSRMatrix) -> np.ndarray:
    """Main diagonal of ``A``; missing entries are zero."""
    rows = A.row_indices()
    hit = rows == A.col_idx
    d = np.zeros(min(A.shape), dtype=A.dtype)
    d[rows[hit]] = A.values[hit]
    return d


def _pack(rows, cols, vals, nrows, ncols) -> CSRMatrix:
    """Sort coordinate arrays by (row, col), sum duplicates and build CSR."""
    order = np.lexsort((cols, rows))
    rows, cols, vals = rows[order], cols[order], vals[order]
    if rows.size:
        new = np.empty(rows.size, dtype=bool)
        new[0] = True
        new[1:] = (rows[1:] != rows[:-1]) | (cols[1:] != cols[:-1])
        starts = np.flatnonzero(new)
        vals = np.add.reduceat(vals, starts)
        rows, cols = rows[starts], cols[starts]
    ptr = np.zeros(nrows + 1, dtype=INDEX)
    np.cumsum(np.bincount(rows, minlength=nrows), out=ptr[1:])
    return CSRMatrix(nrows, ncols, ptr, cols.astype(INDEX), vals)


def csr_from_triplets(triplets: Iterable, nrows: int, ncols: int,
                      dtype=np.float64) -> CSRMatrix:
    """Assemble a CSR matrix from ``(row, col, value)`` triplets.

    Duplicate coordinates are summed, so the result does not depend on the
    order of the input.
    """
    triplets = list(triplets)
    rows = np.fromiter((t[0] for t in triplets), dtype=INDEX, count=len(triplets))
    cols = np.fromiter((t[1] for t in triplets), dtype=INDEX, count=len(triplets))
    vals = np.fromiter((t[2] for t in triplets), dtype=dtype, count=len(triplets))
    bad = (rows < 0) | (rows >= nrows) | (cols < 0) | (cols >= ncols)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise AssemblyError(
            f"triplet #{k} {tuple(triplets[k])} out of range for {nrows}x{ncols} matrix")
    return _pack(rows, cols, vals, nrows, ncols)


def csr_from_coo(rows, cols, vals, nrows: int, ncols: int) -> CSRMatrix:
    """Array form of :func:`csr_from_triplets`, for bulk assembly."""
    rows = np.asarray(rows, dtype=INDEX)
    cols = np.asarray(cols, dtype=INDEX)
    vals = np.asarray(vals)
    bad = (rows < 0) | (rows >= nrows) | (cols < 0) | (cols >= ncols)
    if bad.any():
        k = int(np.flatnonzero(bad)[0])
        raise AssemblyError(
            f"entry #{k} ({rows[k]}, {cols[k]}, {vals[k]}) out of range "
            f"for {nrows}x{ncols} matrix")
    return _pack(rows, cols, vals, nrows, ncols)


def transpose(A: CSRMatrix) -> CSRMatrix:
    # stable sort by column keeps the original (ascending) row order
    order = np.argsort(A.col_idx, kind="stable")
    ptr = np.zeros(A.ncols + 1, dtype=INDEX)
    np.cumsum(np.bincount(A.col_idx, minlength=A.ncols), out=ptr[1:])
    return CSRMatrix(A.ncols, A.nrows, ptr, A.row_indices()[order], A.values[order])


def spgemm(A: CSRMatrix, B: CSRMatrix) -> CSRMatrix:
    """Sparse product ``A @ B``.

    Entries that cancel to zero are kept in the pattern.
    """
    if A.ncols != B.nrows:
        raise DimensionError(f"spgemm: {A.shape} @ {B.shape}")
    dtype = np.result_type(A.dtype, B.dtype)
    row_nnz = np.zeros(A.nrows, dtype=INDEX)
    _kernels.spgemm_count(A.row_ptr, A.col_idx, B.row_ptr, B.col_idx, B.ncols,
                          0, A.nrows, row_nnz)
    ptr = np.zeros(A.nrows + 1, dtype=INDEX)
    np.cumsum(row_nnz, out=ptr[1:])
    idx = np.empty(ptr[-1], dtype=INDEX)
    val = np.empty(ptr[-1], dtype=dtype)
    _kernels.spgemm_fill(A.row_ptr, A.col_idx, A.values.astype(dtype, copy=False),
                         B.row_ptr, B.col_idx, B.values.astype(dtype, copy=False),
                         B.ncols, 0, A.nrows, ptr, idx, val)
    return CSRMatrix(A.nrows, B.ncols, ptr, idx, val)


def galerkin_product(R: CSRMatrix, A: CSRMatrix, P: CSRMatrix) -> CSRMatrix:
    """Coarse operator ``R A P``."""
    if R.ncols != A.nrows or A.ncols != P.nrows:
        raise DimensionError(f"galerkin_product: {R.shape} {A.shape} {P.shape}")
    return spgemm(spgemm(R, A), P)
