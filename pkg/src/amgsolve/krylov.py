"""Preconditioned conjugate gradient and BiCGStab.

Both methods stop on the true residual relative to the right-hand side,
``||f - A u|| <= max(tol * ||f||, abstol)``. The recurrence residual is
replaced by the true residual every ``REPLACE_EVERY`` iterations and checked
against it before convergence is declared.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .backend import Backend, default_backend
from .sparse import CSRMatrix, DimensionError

__all__ = [
    "BiCGStab",
    "CG",
    "Identity",
    "SolveResult",
    "SolverParams",
    "bicgstab",
    "cg",
]

REPLACE_EVERY = 50


@dataclass(frozen=True)
class SolverParams:
    tol: float = 1e-8
    abstol: float = 0.0
    maxiter: int = 100

    def __post_init__(self):
        if self.tol < 0 or self.abstol < 0 or (self.tol == 0 and self.abstol == 0):
            raise ValueError("need tol >= 0, abstol >= 0 and not both zero")
        if self.maxiter < 1:
            raise ValueError("maxiter must be >= 1")


@dataclass(frozen=True)
class SolveResult:
    iterations: int
    relative_residual: float
    converged: bool
    breakdown: str | None = None


class Identity:
    """No preconditioning."""

    def __init__(self, backend: Backend | None = None):
        self.backend = backend or default_backend()

    def apply(self, r, z) -> None:
        self.backend.copy(r, z)


class _Krylov:
    nvectors = 0

    def __init__(self, n: int, params: SolverParams = SolverParams(),
                 backend: Backend | None = None):
        self.n = n
        self.params = params
        self.backend = backend or default_backend()
        self._work = [self.backend.vector(n) for _ in range(self.nvectors)]

    def _start(self, A: CSRMatrix, f, u):
        if A.nrows != self.n or A.ncols != self.n or f.shape[0] != self.n \
                or u.shape[0] != self.n:
            raise DimensionError(f"solver of size {self.n} got {A.shape}, f[{f.shape[0]}]")
        be = self.backend
        norm_f = be.norm2(f)
        eps = max(self.params.tol * norm_f, self.params.abstol)
        return norm_f, eps

    def _finish(self, A, f, u, r, norm_f, iters, converged, breakdown=None):
        self.backend.residual(A, u, f, r)
        res = self.backend.norm2(r)
        rel = res / norm_f if norm_f > 0 else res
        return SolveResult(iters, rel, converged, breakdown)

    def __call__(self, A, M, f, u) -> SolveResult:
        raise NotImplementedError


class CG(_Krylov):
    """Preconditioned conjugate gradient for symmetric positive definite
    systems. ``M`` must be self-adjoint and positive definite."""

    nvectors = 4

    def __call__(self, A: CSRMatrix, M, f, u) -> SolveResult:
        be = self.backend
        r, z, p, q = self._work
        norm_f, eps = self._start(A, f, u)
        if norm_f == 0.0:
            be.set_zero(u)
            return SolveResult(0, 0.0, True)
        be.residual(A, u, f, r)
        res = be.norm2(r)
        if res <= eps:
            return self._finish(A, f, u, r, norm_f, 0, True)

        rho_prev = 1.0
        for it in range(1, self.params.maxiter + 1):
            M.apply(r, z)
            rho = be.dot(r, z)
            if not rho > 0.0:
                return self._finish(A, f, u, r, norm_f, it - 1, False,
                                    "preconditioned residual norm is not positive")
            if it == 1:
                be.copy(z, p)
            else:
                be.axpby(1.0, z, rho / rho_prev, p)
            be.spmv(1.0, A, p, 0.0, q)
            pq = be.dot(p, q)
            if not pq > 0.0:
                return self._finish(A, f, u, r, norm_f, it - 1, False,
                                    "search direction has non-positive curvature")
            alpha = rho / pq
            be.axpby(alpha, p, 1.0, u)
            be.axpby(-alpha, q, 1.0, r)
            rho_prev = rho

            if it % REPLACE_EVERY == 0:
                be.residual(A, u, f, r)
            res = be.norm2(r)
            if res <= eps:
                be.residual(A, u, f, r)
                res = be.norm2(r)
                if res <= eps:
                    return self._finish(A, f, u, r, norm_f, it, True)
        return self._finish(A, f, u, r, norm_f, self.params.maxiter, False)


class BiCGStab(_Krylov):
    """Right-preconditioned BiCGStab with shadow residual ``r0``."""

    nvectors = 8

    def __call__(self, A: CSRMatrix, M, f, u) -> SolveResult:
        be = self.backend
        r, rhat, p, v, phat, s, shat, t = self._work
        norm_f, eps = self._start(A, f, u)
        if norm_f == 0.0:
            be.set_zero(u)
            return SolveResult(0, 0.0, True)
        be.residual(A, u, f, r)
        res = be.norm2(r)
        if res <= eps:
            return self._finish(A, f, u, r, norm_f, 0, True)
        be.copy(r, rhat)
        tiny = 1e-30
        scale = res * res

        rho_prev = alpha = omega = 1.0
        for it in range(1, self.params.maxiter + 1):
            rho = be.dot(rhat, r)
            if abs(rho) < tiny * scale:
                return self._finish(A, f, u, r, norm_f, it - 1, False,
                                    "rho breakdown: shadow residual orthogonal to residual")
            if it == 1:
                be.copy(r, p)
            else:
                beta = (rho / rho_prev) * (alpha / omega)
                be.axpbypcz(1.0, r, -beta * omega, v, beta, p)
            M.apply(p, phat)
            be.spmv(1.0, A, phat, 0.0, v)
            rv = be.dot(rhat, v)
            if abs(rv) < tiny * scale:
                return self._finish(A, f, u, r, norm_f, it - 1, False,
                                    "breakdown: shadow residual orthogonal to A M p")
            alpha = rho / rv
            be.copy(r, s)
            be.axpby(-alpha, v, 1.0, s)

            if be.norm2(s) <= eps:
                be.axpby(alpha, phat, 1.0, u)
                be.residual(A, u, f, r)
                if be.norm2(r) <= eps:
                    return self._finish(A, f, u, r, norm_f, it, True)
                # recurrence drifted; restart the iteration from the true residual
                be.copy(r, rhat)
                scale = be.dot(r, r)
                rho_prev = alpha = omega = 1.0
                continue

            M.apply(s, shat)
            be.spmv(1.0, A, shat, 0.0, t)
            tt = be.dot(t, t)
            omega = be.dot(t, s) / tt if tt > 0.0 else 0.0
            if abs(omega) < tiny or not math.isfinite(omega):
                be.axpby(alpha, phat, 1.0, u)
                return self._finish(A, f, u, r, norm_f, it, False,
                                    "omega breakdown")
            be.axpbypcz(alpha, phat, omega, shat, 1.0, u)
            be.copy(s, r)
            be.axpby(-omega, t, 1.0, r)
            rho_prev = rho

            if it % REPLACE_EVERY == 0:
                be.residual(A, u, f, r)
            if be.norm2(r) <= eps:
                be.residual(A, u, f, r)
                if be.norm2(r) <= eps:
                    return self._finish(A, f, u, r, norm_f, it, True)
        return self._finish(A, f, u, r, norm_f, self.params.maxiter, False)


def _solve(cls, A, M, f, u, params, backend):
    backend = backend or default_backend()
    if M is None:
        M = Identity(backend)
    return cls(A.nrows, params, backend)(A, M, f, u)


def cg(A: CSRMatrix, M, f, u, params: SolverParams = SolverParams(),
       backend: Backend | None = None) -> SolveResult:
    """Solve ``A u = f`` with preconditioned CG, ``u`` holding the initial
    guess on entry and the solution on exit. ``M=None`` means no
    preconditioner."""
    return _solve(CG, A, M, f, u, params, backend)


def bicgstab(A: CSRMatrix, M, f, u, params: SolverParams = SolverParams(),
             backend: Backend | None = None) -> SolveResult:
    """Solve ``A u = f`` with right-preconditioned BiCGStab."""
    return _solve(BiCGStab, A, M, f, u, params, backend)
