"""Smoothers applied on every level of the hierarchy.

A smoother is built once per matrix (:func:`build_smoother`) and applied
many times through backend primitives (:func:`relax`). Apply calls use
caller-owned scratch vectors, see :meth:`Smoother.workspace`.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .backend import Backend, default_backend
from .sparse import CSRMatrix, DimensionError, diagonal

__all__ = [
    "RelaxParams",
    "RelaxType",
    "RelaxationError",
    "Smoother",
    "build_smoother",
    "estimate_spectral_radius",
    "gershgorin_bound",
    "relax",
    "spai0_diagonal",
]


class RelaxationError(ValueError):
    pass


class RelaxType(str, enum.Enum):
    damped_jacobi = "damped_jacobi"
    spai0 = "spai0"
    gauss_seidel = "gauss_seidel"
    chebyshev = "chebyshev"


@dataclass(frozen=True)
class RelaxParams:
    type: RelaxType = RelaxType.spai0
    omega: float = 0.72
    cheb_degree: int = 5
    cheb_lower_fraction: float = 1.0 / 30.0
    power_iters: int = 20

    def __post_init__(self):
        object.__setattr__(self, "type", RelaxType(self.type))
        if not 0.0 < self.omega < 2.0:
            raise ValueError(f"relaxation omega must be in (0, 2), got {self.omega}")
        if self.cheb_degree < 1:
            raise ValueError("cheb_degree must be >= 1")


@dataclass(frozen=True)
class Smoother:
    kind: RelaxType
    n: int
    # inverse diagonal (Jacobi), SPAI-0 diagonal, or plain diagonal (Gauss-Seidel)
    diag: np.ndarray | None = None
    omega: float = 1.0
    degree: int = 0
    lambda_min: float = 0.0
    lambda_max: float = 0.0
    # power iteration did not settle and the Gershgorin bound was used
    spectral_fallback: bool = False

    def workspace(self, backend: Backend | None = None) -> list:
        backend = backend or default_backend()
        count = {RelaxType.gauss_seidel: 0, RelaxType.chebyshev: 2}.get(self.kind, 1)
        return [backend.vector(self.n) for _ in range(count)]

    @property
    def symmetric(self) -> bool:
        """Whether a single application is a self-adjoint operator."""
        return self.kind is not RelaxType.gauss_seidel


def _checked_diagonal(A: CSRMatrix) -> np.ndarray:
    if A.nrows != A.ncols:
        raise RelaxationError(f"smoother needs a square matrix, got {A.shape}")
    d = diagonal(A)
    if np.any(d == 0):
        i = int(np.flatnonzero(d == 0)[0])
        raise RelaxationError(f"zero diagonal entry at row {i}")
    return d


def spai0_diagonal(A: CSRMatrix) -> np.ndarray:
    """Diagonal ``M`` minimising ``||I - M A||_F``: ``m_i = a_ii / sum_j a_ij^2``."""
    d = _checked_diagonal(A)
    rows = A.row_indices()
    sq = np.bincount(rows, weights=np.square(A.values, dtype=np.float64),
                     minlength=A.nrows)
    return (d / sq).astype(A.dtype)


def gershgorin_bound(A: CSRMatrix, diag_scaled: bool = False) -> float:
    rows = A.row_indices()
    sums = np.bincount(rows, weights=np.abs(A.values), minlength=A.nrows)
    if diag_scaled:
        sums = sums / np.abs(diagonal(A))
    return float(sums.max()) if sums.size else 0.0


def _power_iteration(A: CSRMatrix, diag_scaled: bool, iters: int):
    n = A.nrows
    if A.nrows != A.ncols:
        raise RelaxationError(f"spectral radius needs a square matrix, got {A.shape}")
    inv_d = 1.0 / _checked_diagonal(A) if diag_scaled else None
    be = default_backend()
    x = np.random.default_rng(20180719).uniform(0.5, 1.5, n)
    x /= np.linalg.norm(x)
    y = np.empty(n)
    Af = A.astype(np.float64)
    rho = prev = 0.0
    for _ in range(max(iters, 1)):
        be.spmv(1.0, Af, x, 0.0, y)
        if inv_d is not None:
            y *= inv_d
        prev, rho = rho, be.norm2(y)
        if rho == 0.0:
            return 0.0, True
        np.divide(y, rho, out=x)
    converged = math.isfinite(rho) and abs(rho - prev) <= 1e-2 * rho
    return rho, converged


def estimate_spectral_radius(A: CSRMatrix, diag_scaled: bool = False,
                             iters: int = 20) -> float:
    """Power-iteration estimate of the spectral radius of ``A`` (or of
    ``D^-1 A`` when ``diag_scaled``). The start vector is seeded, so the
    result is reproducible."""
    rho, _ = _power_iteration(A, diag_scaled, iters)
    return rho


def build_smoother(A: CSRMatrix, p: RelaxParams = RelaxParams()) -> Smoother:
    kind = RelaxType(p.type)
    if kind is RelaxType.damped_jacobi:
        return Smoother(kind, A.nrows, (1.0 / _checked_diagonal(A)).astype(A.dtype),
                        omega=p.omega)
    if kind is RelaxType.spai0:
        return Smoother(kind, A.nrows, spai0_diagonal(A))
    if kind is RelaxType.gauss_seidel:
        return Smoother(kind, A.nrows, _checked_diagonal(A))
    # Chebyshev
    if A.nrows != A.ncols:
        raise RelaxationError(f"smoother needs a square matrix, got {A.shape}")
    rho, ok = _power_iteration(A, False, p.power_iters)
    if ok:
        hi = 1.02 * rho
    else:
        hi = gershgorin_bound(A)
    return Smoother(kind, A.nrows, degree=p.cheb_degree, lambda_max=hi,
                    lambda_min=hi * p.cheb_lower_fraction, spectral_fallback=not ok)


def relax(s: Smoother, A: CSRMatrix, f, u, direction: str = "pre",
          backend: Backend | None = None, scratch=None) -> None:
    """One smoothing step on ``A u = f``, updating ``u`` in place.

    Gauss-Seidel sweeps forward for ``direction="pre"`` and backward for
    ``"post"``; the other smoothers ignore ``direction``.
    """
    if A.nrows != s.n or f.shape[0] != s.n or u.shape[0] != s.n:
        raise DimensionError(f"smoother of size {s.n} applied to {A.shape}")
    be = backend or default_backend()
    if scratch is None:
        scratch = s.workspace(be)

    if s.kind is RelaxType.gauss_seidel:
        _kernels.gauss_seidel_sweep(A.row_ptr, A.col_idx, A.values, s.diag, f, u,
                                    direction == "pre")
        return

    if s.kind is RelaxType.chebyshev:
        r, d = scratch[0], scratch[1]
        theta = 0.5 * (s.lambda_max + s.lambda_min)
        delta = 0.5 * (s.lambda_max - s.lambda_min)
        sigma = theta / delta
        rho = 1.0 / sigma
        be.residual(A, u, f, r)
        be.axpby(1.0 / theta, r, 0.0, d)
        for k in range(s.degree):
            be.axpby(1.0, d, 1.0, u)
            if k + 1 == s.degree:
                break
            be.spmv(-1.0, A, d, 1.0, r)
            rho_next = 1.0 / (2.0 * sigma - rho)
            be.axpby(2.0 * rho_next / delta, r, rho_next * rho, d)
            rho = rho_next
        return

    r = scratch[0]
    be.residual(A, u, f, r)
    be.vmul(s.omega, s.diag, r, 1.0, u)
