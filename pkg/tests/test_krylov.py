import numpy as np
import pytest
from numpy.testing import assert_allclose

from amgsolve.hierarchy import AMG
from amgsolve.krylov import REPLACE_EVERY, SolverParams, bicgstab, cg
from amgsolve.poisson import generate_poisson
from amgsolve.sparse import CSRMatrix, identity

from conftest import poisson2d, random_spd


def dense_cg(A, f, tol, maxiter=1000):
    """Textbook unpreconditioned CG in numpy; returns the iteration count at
    which ||f - A u|| <= tol ||f||."""
    u = np.zeros_like(f)
    r = f.copy()
    p = r.copy()
    rr = r @ r
    target = tol * np.linalg.norm(f)
    for it in range(1, maxiter + 1):
        q = A @ p
        alpha = rr / (p @ q)
        u += alpha * p
        r -= alpha * q
        if np.linalg.norm(f - A @ u) <= target:
            return it
        rr_new = r @ r
        p = r + (rr_new / rr) * p
        rr = rr_new
    return None


def true_relres(A, f, u):
    return np.linalg.norm(f - A.to_scipy() @ u) / np.linalg.norm(f)


def test_cg_identity(rng):
    f = rng.standard_normal(7)
    u = np.zeros(7)
    res = cg(identity(7), None, f, u)
    assert res.converged and res.iterations == 1
    assert_allclose(u, f)


def test_cg_three_eigenvalues():
    A = CSRMatrix.from_dense(np.diag([1.0, 2.0, 3.0]))
    f = np.array([1.0, 1.0, 1.0])
    u = np.zeros(3)
    res = cg(A, None, f, u, SolverParams(tol=1e-12))
    assert res.converged and res.iterations <= 3
    assert_allclose(u, [1.0, 0.5, 1 / 3], rtol=1e-12)


def test_cg_iteration_count_matches_dense_oracle():
    A, dense = poisson2d(8)
    f = np.ones(64)
    u = np.zeros(64)
    res = cg(A, None, f, u, SolverParams(tol=1e-8))
    assert res.converged
    assert res.iterations == dense_cg(dense, f, 1e-8)


def test_cg_finite_termination(rng):
    for n in range(2, 21, 3):
        A, _ = random_spd(rng, n)
        f = rng.standard_normal(n)
        u = np.zeros(n)
        res = cg(A, None, f, u, SolverParams(tol=1e-12, maxiter=100))
        assert res.converged
        assert res.iterations <= n + 1


def test_reported_residual_is_true_residual(rng):
    A = generate_poisson(10).A
    f = rng.standard_normal(A.nrows)
    for method in (cg, bicgstab):
        u = np.zeros(A.nrows)
        res = method(A, AMG(A), f, u)
        assert res.converged
        assert abs(res.relative_residual - true_relres(A, f, u)) <= 1e-12
        assert res.relative_residual <= 1e-8


def test_iteration_count_is_scale_invariant():
    A, dense = poisson2d(10)
    f = np.ones(100)
    counts = set()
    for alpha in (1e-3, 1.0, 1e3):
        As = CSRMatrix.from_dense(alpha * dense)
        u = np.zeros(100)
        counts.add(cg(As, None, alpha * f, u).iterations)
    assert len(counts) == 1


def test_cg_flags_indefinite_matrix():
    A = CSRMatrix.from_dense(np.diag([1.0, -1.0]))
    u = np.zeros(2)
    res = cg(A, None, np.array([1.0, 1.0]), u)
    assert not res.converged
    assert "curvature" in res.breakdown


def test_maxiter_reports_non_convergence():
    A = generate_poisson(8).A
    u = np.zeros(A.nrows)
    res = cg(A, None, np.ones(A.nrows), u, SolverParams(maxiter=2))
    assert not res.converged and res.iterations == 2
    assert res.relative_residual > 1e-8


def test_zero_rhs_short_circuit():
    for method in (cg, bicgstab):
        u = np.ones(4)
        res = method(identity(4), None, np.zeros(4), u)
        assert res.converged and res.iterations == 0
        assert not u.any()


def test_bicgstab_identity(rng):
    f = rng.standard_normal(5)
    u = np.zeros(5)
    res = bicgstab(identity(5), None, f, u)
    assert res.converged and res.iterations == 1
    assert_allclose(u, f)


def test_bicgstab_nonsymmetric():
    A = CSRMatrix.from_dense([[2.0, 1.0], [0.0, 2.0]])
    f = np.array([3.0, 2.0])
    u = np.zeros(2)
    res = bicgstab(A, None, f, u)
    assert res.converged
    assert np.linalg.norm(f - A.todense() @ u) <= 1e-8 * np.linalg.norm(f)
    assert_allclose(u, [1.0, 1.0], rtol=1e-8)


def test_bicgstab_with_amg_on_convection_diffusion():
    m = 24
    T = 2 * np.eye(m) - np.eye(m, k=1) - 1.3 * np.eye(m, k=-1)
    dense = np.kron(np.eye(m), T) + np.kron(T, np.eye(m))
    A = CSRMatrix.from_dense(dense)
    f = np.ones(m * m)
    u = np.zeros(m * m)
    from amgsolve.hierarchy import AMGParams
    res = bicgstab(A, AMG(A, AMGParams(coarse_enough=50)), f, u)
    assert res.converged
    assert true_relres(A, f, u) <= 1e-8


def test_initial_guess_is_used(rng):
    A, dense = random_spd(rng, 12)
    f = rng.standard_normal(12)
    u = np.linalg.solve(dense, f)
    res = cg(A, None, f, u)
    assert res.converged and res.iterations == 0


def test_true_residual_replacement_keeps_long_runs_honest():
    A, _ = poisson2d(40)
    f = np.ones(A.nrows)
    u = np.zeros(A.nrows)
    res = cg(A, None, f, u, SolverParams(tol=1e-10, maxiter=500))
    assert res.converged and res.iterations > REPLACE_EVERY
    assert abs(res.relative_residual - true_relres(A, f, u)) <= 1e-12


def test_amg_cg_mesh_quasi_independence():
    counts = []
    for n in (16, 32, 64):
        A = generate_poisson(n).A
        u = np.zeros(A.nrows)
        res = cg(A, AMG(A), np.ones(A.nrows), u)
        assert res.converged
        counts.append(res.iterations)
    assert counts[1] <= 1.5 * counts[0] and counts[2] <= 1.5 * counts[1]


def test_solver_params_validation():
    with pytest.raises(ValueError):
        SolverParams(tol=0, abstol=0)
    with pytest.raises(ValueError):
        SolverParams(maxiter=0)
    u = np.zeros(3)
    res = cg(identity(3), None, np.ones(3), u, SolverParams(tol=0, abstol=1e-3))
    assert res.converged
