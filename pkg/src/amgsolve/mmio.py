"""MatrixMarket input and output."""
from __future__ import annotations

import os

import numpy as np
import scipy.io
import scipy.sparse

from .sparse import CSRMatrix, csr_from_coo

__all__ = ["MatrixMarketError", "read_matrix_market", "read_rhs",
           "write_matrix_market", "write_vector"]


class MatrixMarketError(ValueError):
    pass


def _info(path):
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such file: {path}")
    try:
        return scipy.io.mminfo(path)
    except Exception as exc:
        raise MatrixMarketError(f"{path}: malformed MatrixMarket header ({exc})") from exc


def read_matrix_market(path) -> CSRMatrix:
    """Read a real coordinate matrix; symmetric storage is expanded and
    duplicate entries are summed."""
    rows, cols, _, fmt, field, symmetry = _info(path)
    if fmt != "coordinate":
        raise MatrixMarketError(f"{path}: expected coordinate format, found {fmt}")
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"{path}: unsupported field {field!r}")
    if symmetry not in ("general", "symmetric"):
        raise MatrixMarketError(f"{path}: unsupported symmetry {symmetry!r}")
    try:
        m = scipy.sparse.coo_matrix(scipy.io.mmread(path))
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    return csr_from_coo(m.row, m.col, m.data.astype(np.float64), rows, cols)


def read_rhs(path) -> np.ndarray:
    """Read a vector stored as a MatrixMarket array (or single-column
    coordinate) file."""
    rows, cols, _, fmt, field, _ = _info(path)
    if field not in ("real", "integer", "double"):
        raise MatrixMarketError(f"{path}: unsupported field {field!r}")
    if cols != 1:
        raise MatrixMarketError(f"{path}: expected a single column, found {cols}")
    try:
        data = scipy.io.mmread(path)
    except ValueError as exc:
        raise MatrixMarketError(f"{path}: {exc}") from exc
    if scipy.sparse.issparse(data):
        data = data.toarray()
    return np.asarray(data, dtype=np.float64).reshape(rows)


def write_matrix_market(path, A: CSRMatrix) -> None:
    scipy.io.mmwrite(path, A.to_scipy().tocoo(), field="real", precision=17,
                     symmetry="general")


def write_vector(path, x) -> None:
    scipy.io.mmwrite(path, np.asarray(x, dtype=np.float64).reshape(-1, 1),
                     field="real", precision=17)
