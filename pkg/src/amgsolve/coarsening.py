"""Transfer operators from plain and smoothed aggregation."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import _kernels
from .sparse import CSRMatrix, INDEX, diagonal, spgemm, transpose

__all__ = [
    "Aggregates",
    "CoarseningError",
    "CoarseningParams",
    "StagnationError",
    "StrengthGraph",
    "aggregate",
    "coarsen",
    "filtered_matrix",
    "smooth_prolongation",
    "strength_graph",
    "tentative_prolongation",
]


class CoarseningError(ValueError):
    pass


class StagnationError(CoarseningError):
    """Aggregation produced as many aggregates as there are rows."""


@dataclass(frozen=True)
class CoarseningParams:
    eps_strong: float = 0.08
    # eps_strong is multiplied by this factor on every coarser level
    eps_decay: float = 0.5
    smoothing_omega: float = 2.0 / 3.0
    smooth: bool = True
    # scale omega by 4/3 / rho(D^-1 A) instead of using it as given
    adapt_omega: bool = False
    power_iters: int = 20

    def at_level(self, level: int) -> "CoarseningParams":
        """Parameters for coarsening the matrix on ``level`` (0 = finest)."""
        return replace(self, eps_strong=self.eps_strong * self.eps_decay**level)

    def __post_init__(self):
        if not 0.0 <= self.eps_strong < 1.0:
            raise ValueError(f"eps_strong must be in [0, 1), got {self.eps_strong}")
        if not 0.0 < self.eps_decay <= 1.0:
            raise ValueError(f"eps_decay must be in (0, 1], got {self.eps_decay}")
        if not 0.0 < self.smoothing_omega < 2.0:
            raise ValueError(f"smoothing_omega must be in (0, 2), got {self.smoothing_omega}")


@dataclass(frozen=True)
class StrengthGraph:
    """Boolean mask over ``A``'s stored entries: ``strong[k]`` refers to
    ``A.values[k]``. Diagonal entries are always strong."""

    A: CSRMatrix
    strong: np.ndarray

    @property
    def n(self) -> int:
        return self.A.nrows

    def pattern(self) -> CSRMatrix:
        """The strong entries of ``A`` as a CSR matrix."""
        A = self.A
        keep = self.strong
        running = np.concatenate(([0], np.cumsum(keep, dtype=INDEX)))
        ptr = running[A.row_ptr]
        return CSRMatrix(A.nrows, A.ncols, ptr, A.col_idx[keep], A.values[keep])


@dataclass(frozen=True)
class Aggregates:
    id: np.ndarray
    count: int

    def sizes(self) -> np.ndarray:
        return np.bincount(self.id, minlength=self.count)


def strength_graph(A: CSRMatrix, eps_strong: float = 0.08) -> StrengthGraph:
    """Mark ``a_ij`` strong when ``a_ij^2 > eps^2 * a_ii * a_jj``."""
    if A.nrows != A.ncols:
        raise CoarseningError(f"strength graph needs a square matrix, got {A.shape}")
    d = diagonal(A)
    if np.any(d <= 0):
        i = int(np.flatnonzero(d <= 0)[0])
        raise CoarseningError(f"non-positive diagonal entry a[{i},{i}] = {d[i]}")
    rows = A.row_indices()
    cols = A.col_idx
    on_diag = rows == cols
    v = A.values.astype(np.float64)
    strong = on_diag | (v * v > eps_strong * eps_strong * d[rows] * d[cols])
    return StrengthGraph(A, strong)


def aggregate(S: StrengthGraph) -> Aggregates:
    """Greedy aggregation over the strong connections.

    Rows are visited in index order; a row whose strong neighbours are all
    unassigned becomes a root and takes its whole neighbourhood. Leftover
    rows join the aggregate of their strongest root-phase neighbour (ties go
    to the lower column), and whatever remains becomes a singleton.
    """
    G = S.pattern()
    agg, count = _kernels.greedy_aggregate(G.row_ptr, G.col_idx, G.nrows)
    agg, count = _kernels.attach_leftovers(G.row_ptr, G.col_idx, G.values, agg, count)
    return Aggregates(agg, int(count))


def tentative_prolongation(agg: Aggregates, nrows: int, dtype=np.float64) -> CSRMatrix:
    """Piecewise-constant indicator: one unit entry per row."""
    return CSRMatrix(nrows, agg.count, np.arange(nrows + 1, dtype=INDEX),
                     agg.id.astype(INDEX), np.ones(nrows, dtype=dtype))


def filtered_matrix(A: CSRMatrix, S: StrengthGraph) -> CSRMatrix:
    """``A`` restricted to strong entries, weak off-diagonals lumped onto the
    diagonal so that row sums are preserved."""
    rows = A.row_indices()
    weak = ~S.strong
    lumped = np.bincount(rows[weak], weights=A.values[weak], minlength=A.nrows)
    G = S.pattern()
    vals = G.values.copy()
    on_diag = G.row_indices() == G.col_idx
    lumped_diag = vals[on_diag] + lumped[G.col_idx[on_diag]]
    # a zero-row-sum row with only weak neighbours would lump to zero;
    # such rows keep their own diagonal
    scale = np.abs(vals[on_diag])
    keep = np.abs(lumped_diag) <= 1e-8 * scale
    vals[on_diag] = np.where(keep, vals[on_diag], lumped_diag).astype(vals.dtype)
    return CSRMatrix(G.nrows, G.ncols, G.row_ptr, G.col_idx, vals)


def smooth_prolongation(A: CSRMatrix, S: StrengthGraph, Pt: CSRMatrix,
                        omega: float = 2.0 / 3.0) -> CSRMatrix:
    """Damped-Jacobi smoothing of the tentative prolongation:
    ``P = (I - omega * D^-1 A_F) Pt``."""
    if A.ncols != Pt.nrows:
        raise CoarseningError(f"prolongation has {Pt.nrows} rows, matrix is {A.shape}")
    AF = filtered_matrix(A, S)
    d = diagonal(AF)
    if np.any(d == 0):
        i = int(np.flatnonzero(d == 0)[0])
        raise CoarseningError(f"zero diagonal in filtered matrix at row {i}")
    rows = AF.row_indices()
    vals = -omega * AF.values / d[rows]
    vals[rows == AF.col_idx] += 1.0
    smoother = CSRMatrix(AF.nrows, AF.ncols, AF.row_ptr, AF.col_idx, vals.astype(A.dtype))
    return spgemm(smoother, Pt)


def coarsen(A: CSRMatrix, p: CoarseningParams = CoarseningParams()):
    """Build ``(P, R)`` for one level, with ``R = P^T``.

    Raises :class:`StagnationError` when aggregation cannot reduce the size.
    """
    if A.nrows != A.ncols:
        raise CoarseningError(f"coarsening needs a square matrix, got {A.shape}")
    S = strength_graph(A, p.eps_strong)
    agg = aggregate(S)
    if agg.count >= A.nrows:
        raise StagnationError(
            f"aggregation of {A.nrows} rows produced {agg.count} aggregates")
    P = tentative_prolongation(agg, A.nrows, A.dtype)
    if p.smooth:
        omega = p.smoothing_omega
        if p.adapt_omega:
            from .relaxation import estimate_spectral_radius
            rho = estimate_spectral_radius(A, diag_scaled=True, iters=p.power_iters)
            omega = (4.0 / 3.0) / rho
        P = smooth_prolongation(A, S, P, omega)
    return P, transpose(P)
