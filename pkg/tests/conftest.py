import numpy as np
import pytest

from amgsolve.sparse import CSRMatrix, csr_from_coo


def random_sparse(rng, nrows, ncols, density=0.2, dtype=np.float64):
    """Random CSR matrix together with its dense twin."""
    dense = rng.standard_normal((nrows, ncols))
    dense[rng.random((nrows, ncols)) > density] = 0.0
    return CSRMatrix.from_dense(dense, dtype), dense.astype(dtype)


def random_spd(rng, n, density=0.2):
    _, B = random_sparse(rng, n, n, density)
    dense = B @ B.T + n * np.eye(n)
    return CSRMatrix.from_dense(dense), dense


def poisson1d(n, dtype=np.float64):
    i = np.arange(n)
    rows = np.concatenate([i, i[1:], i[:-1]])
    cols = np.concatenate([i, i[:-1], i[1:]])
    vals = np.concatenate([np.full(n, 2.0), -np.ones(n - 1), -np.ones(n - 1)])
    return csr_from_coo(rows, cols, vals.astype(dtype), n, n)


def poisson2d(m):
    """5-point Laplacian on an m x m grid."""
    T = poisson1d(m).todense()
    dense = np.kron(np.eye(m), T) + np.kron(T, np.eye(m))
    return CSRMatrix.from_dense(dense), dense


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# one "PASS/FAIL criterion N: ..." line per acceptance criterion, filled in by
# test_acceptance.py and repeated at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
