"""Multigrid hierarchy construction and the V-cycle.

The setup phase runs on plain host arrays; the resulting :class:`Hierarchy`
is immutable. Everything the solve phase writes to lives in a
:class:`Workspace`, so several workspaces can drive one hierarchy from
different threads.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .backend import Backend, default_backend
from .coarsening import CoarseningParams, StagnationError, coarsen
from .relaxation import RelaxParams, Smoother, build_smoother, relax
from .sparse import CSRMatrix, DimensionError, galerkin_product

__all__ = [
    "AMG",
    "AMGParams",
    "DenseLU",
    "Hierarchy",
    "HierarchyReport",
    "Level",
    "SetupError",
    "Workspace",
    "apply_preconditioner",
    "hierarchy_report",
    "setup",
    "vcycle",
]

log = logging.getLogger(__name__)

# refuse to densify anything larger than this at the coarsest level
MAX_DENSE_ROWS = 16384
STAGNATION_RATIO = 0.95


class SetupError(RuntimeError):
    pass


@dataclass(frozen=True)
class AMGParams:
    coarsening: CoarseningParams = field(default_factory=CoarseningParams)
    relax: RelaxParams = field(default_factory=RelaxParams)
    npre: int = 1
    npost: int = 1
    coarse_enough: int = 3000
    max_levels: int = 30

    def __post_init__(self):
        if self.npre < 0 or self.npost < 0 or self.npre + self.npost < 1:
            raise ValueError("need npre + npost >= 1")
        if self.coarse_enough < 1:
            raise ValueError("coarse_enough must be >= 1")
        if self.max_levels < 1:
            raise ValueError("max_levels must be >= 1")


class DenseLU:
    """LU factorisation with partial pivoting of a small dense matrix."""

    def __init__(self, A: CSRMatrix):
        dense = A.astype(np.float64).todense()
        self.n = A.nrows
        self.dtype = A.dtype
        scale = np.abs(dense).max() if dense.size else 0.0
        with warnings.catch_warnings():
            # singularity is reported below with our own threshold
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.lu, self.piv = scipy.linalg.lu_factor(dense, check_finite=False)
        pivots = np.abs(np.diag(self.lu))
        if self.n and (scale == 0.0 or pivots.min() < 1e-14 * scale):
            raise SetupError(
                f"coarsest matrix ({self.n}x{self.n}) is singular: "
                f"pivot {pivots.min():.3e} vs max entry {scale:.3e}")

    def solve(self, f, out) -> None:
        out[:] = scipy.linalg.lu_solve((self.lu, self.piv), f, check_finite=False)


@dataclass(frozen=True)
class Level:
    A: CSRMatrix
    P: CSRMatrix | None = None
    R: CSRMatrix | None = None
    smoother: Smoother | None = None

    @property
    def n(self) -> int:
        return self.A.nrows


@dataclass(frozen=True)
class Hierarchy:
    levels: tuple
    coarse: DenseLU
    params: AMGParams
    # setup ended because coarsening stopped reducing the problem
    stagnated: bool = False

    def __len__(self):
        return len(self.levels)


def setup(A: CSRMatrix, p: AMGParams = AMGParams()) -> Hierarchy:
    """Build the hierarchy: coarsen, form the Galerkin operator, build the
    smoother, and repeat until the matrix is small enough for a direct
    solve."""
    if A.nrows != A.ncols:
        raise SetupError(f"AMG needs a square matrix, got {A.shape}")
    levels = []
    stagnated = False
    slow = 0
    current = A
    while current.nrows > p.coarse_enough and len(levels) + 1 < p.max_levels:
        try:
            P, R = coarsen(current, p.coarsening.at_level(len(levels)))
        except StagnationError as exc:
            log.info("stopping at level %d: %s", len(levels), exc)
            stagnated = True
            break
        coarse = galerkin_product(R, current, P)
        levels.append(Level(current, P, R, build_smoother(current, p.relax)))
        log.debug("level %d: %d -> %d rows", len(levels) - 1, current.nrows, coarse.nrows)
        slow = slow + 1 if coarse.nrows > STAGNATION_RATIO * current.nrows else 0
        current = coarse
        if slow >= 2:
            stagnated = True
            break
    if current.nrows > MAX_DENSE_ROWS:
        raise SetupError(
            f"coarsest level has {current.nrows} rows; too large for a dense solve")
    levels.append(Level(current))
    return Hierarchy(tuple(levels), DenseLU(current), p, stagnated)


class Workspace:
    """Per-caller vectors for the V-cycle: ``u``, ``f``, ``e`` on every level
    plus smoother scratch."""

    def __init__(self, h: Hierarchy, backend: Backend | None = None):
        be = backend or default_backend()
        self.u = [be.vector(lvl.n) for lvl in h.levels]
        self.f = [be.vector(lvl.n) for lvl in h.levels]
        self.e = [be.vector(lvl.n) for lvl in h.levels]
        self.scratch = [lvl.smoother.workspace(be) if lvl.smoother else []
                        for lvl in h.levels]


def vcycle(h: Hierarchy, level: int, f, u, backend: Backend | None = None,
           ws: Workspace | None = None) -> None:
    """One V-cycle starting at ``level``; ``u`` is updated in place."""
    be = backend or default_backend()
    ws = ws or Workspace(h, be)
    lvl = h.levels[level]
    if f.shape[0] != lvl.n or u.shape[0] != lvl.n:
        raise DimensionError(f"level {level} has {lvl.n} rows")
    if level == len(h.levels) - 1:
        h.coarse.solve(f, u)
        return
    npre, npost = h.params.npre, h.params.npost
    for _ in range(npre):
        relax(lvl.smoother, lvl.A, f, u, "pre", be, ws.scratch[level])
    e = ws.e[level]
    be.residual(lvl.A, u, f, e)
    fc, uc = ws.f[level + 1], ws.u[level + 1]
    be.spmv(1.0, lvl.R, e, 0.0, fc)
    be.set_zero(uc)
    vcycle(h, level + 1, fc, uc, be, ws)
    be.spmv(1.0, lvl.P, uc, 1.0, u)
    for _ in range(npost):
        relax(lvl.smoother, lvl.A, f, u, "post", be, ws.scratch[level])


def apply_preconditioner(h: Hierarchy, r, z, backend: Backend | None = None,
                         ws: Workspace | None = None) -> None:
    """``z <- M r``: one V-cycle from a zero initial guess."""
    be = backend or default_backend()
    be.set_zero(z)
    vcycle(h, 0, r, z, be, ws)


@dataclass(frozen=True)
class HierarchyReport:
    rows: tuple
    nnz: tuple
    operator_complexity: float
    grid_complexity: float
    stagnated: bool = False

    def __str__(self):
        lines = ["level        rows         nnz"]
        for i, (n, z) in enumerate(zip(self.rows, self.nnz)):
            lines.append(f"{i:5d} {n:11d} {z:11d}")
        lines.append(f"operator complexity: {self.operator_complexity:.3f}")
        lines.append(f"grid complexity:     {self.grid_complexity:.3f}")
        return "\n".join(lines)


def hierarchy_report(h: Hierarchy) -> HierarchyReport:
    rows = tuple(lvl.A.nrows for lvl in h.levels)
    nnz = tuple(lvl.A.nnz for lvl in h.levels)
    return HierarchyReport(rows, nnz, sum(nnz) / nnz[0], sum(rows) / rows[0],
                           h.stagnated)


class AMG:
    """Multigrid hierarchy used as a preconditioner.

    >>> M = AMG(A)            # setup
    >>> M.apply(r, z)         # z <- one V-cycle applied to r

    Instances own a workspace and are not safe for concurrent ``apply``
    calls; use :meth:`clone` to get another handle on the same hierarchy.
    """

    def __init__(self, A: CSRMatrix, params: AMGParams = AMGParams(),
                 backend: Backend | None = None, *, hierarchy: Hierarchy | None = None):
        self.backend = backend or default_backend()
        self.params = params
        self.hierarchy = hierarchy if hierarchy is not None else setup(A, params)
        self.workspace = Workspace(self.hierarchy, self.backend)

    @property
    def n(self) -> int:
        return self.hierarchy.levels[0].n

    def apply(self, r, z) -> None:
        apply_preconditioner(self.hierarchy, r, z, self.backend, self.workspace)

    def __call__(self, r):
        z = self.backend.vector(self.n)
        self.apply(r, z)
        return z

    def clone(self) -> "AMG":
        return AMG(None, self.params, self.backend, hierarchy=self.hierarchy)

    def report(self) -> HierarchyReport:
        return hierarchy_report(self.hierarchy)

    def __repr__(self):
        return f"AMG(levels={len(self.hierarchy)}, rows={self.n})"
