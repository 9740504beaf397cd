import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from amgsolve.sparse import (AssemblyError, CSRMatrix, DimensionError, Triplet,
                             csr_from_triplets, diagonal, galerkin_product, identity,
                             spgemm, transpose)

from conftest import poisson1d, random_sparse


def test_single_triplet():
    A = csr_from_triplets([Triplet(0, 0, 1.0)], 1, 1)
    assert A.nnz == 1
    assert A.values[0] == 1.0


def test_duplicates_are_summed():
    A = csr_from_triplets([(0, 0, 1.0), (0, 0, 2.0)], 1, 1)
    assert A.nnz == 1
    assert A.values[0] == 3.0


def test_sort_and_pack():
    A = csr_from_triplets([(1, 0, -1), (0, 1, -1), (0, 0, 2), (1, 1, 2)], 2, 2)
    assert_array_equal(A.row_ptr, [0, 2, 4])
    assert_array_equal(A.col_idx, [0, 1, 0, 1])
    assert_array_equal(A.values, [2, -1, -1, 2])
    A.check()


def test_out_of_range_triplet_is_named():
    with pytest.raises(AssemblyError, match=r"\(2, 0, 1.0\)"):
        csr_from_triplets([(0, 0, 1.0), (2, 0, 1.0)], 2, 2)


def test_empty_rows_are_legal():
    A = csr_from_triplets([(0, 0, 1.0), (2, 2, 1.0)], 3, 3)
    assert_array_equal(A.row_ptr, [0, 1, 1, 2])
    A.check()
    assert_array_equal(transpose(A).todense(), A.todense())


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 5),
                          st.integers(-3, 3).map(float)), max_size=30),
       st.randoms(use_true_random=False))
def test_triplet_assembly_is_permutation_invariant(triplets, random):
    A = csr_from_triplets(triplets, 5, 6)
    shuffled = list(triplets)
    random.shuffle(shuffled)
    B = csr_from_triplets(shuffled, 5, 6)
    A.check()
    assert_array_equal(A.row_ptr, B.row_ptr)
    assert_array_equal(A.col_idx, B.col_idx)
    # integer-valued input: summation order cannot change the result
    assert_array_equal(A.values, B.values)
    dense = np.zeros((5, 6))
    for i, j, v in triplets:
        dense[i, j] += v
    assert_array_equal(A.todense(), dense)


def test_transpose_examples():
    I = identity(3)
    assert_array_equal(transpose(I).todense(), np.eye(3))
    T = poisson1d(7)
    assert_array_equal(transpose(T).todense(), T.todense())
    col = CSRMatrix.from_dense([[1.0], [1.0]])
    row = transpose(col)
    assert row.shape == (1, 2)
    assert_array_equal(row.todense(), [[1.0, 1.0]])


def test_transpose_twice_is_exact(rng):
    for _ in range(20):
        A, _ = random_sparse(rng, rng.integers(1, 30), rng.integers(1, 30))
        B = transpose(transpose(A))
        assert_array_equal(B.row_ptr, A.row_ptr)
        assert_array_equal(B.col_idx, A.col_idx)
        assert_array_equal(B.values, A.values)


def test_spgemm_examples(rng):
    A, dense = random_sparse(rng, 12, 12)
    assert_array_equal(spgemm(identity(12), A).todense(), dense)
    K = CSRMatrix.from_dense([[2.0, -1.0], [-1.0, 2.0]])
    ones = CSRMatrix.from_dense([[1.0], [1.0]])
    assert_array_equal(spgemm(K, ones).todense(), [[1.0], [1.0]])
    r = CSRMatrix.from_dense([[1.0, 1.0]])
    assert_array_equal(spgemm(r, transpose(r)).todense(), [[2.0]])


def test_spgemm_dimension_mismatch():
    with pytest.raises(DimensionError):
        spgemm(identity(2), identity(3))


def test_spgemm_keeps_cancelled_entries():
    A = CSRMatrix.from_dense([[1.0, 1.0]])
    B = CSRMatrix.from_dense([[1.0], [-1.0]])
    C = spgemm(A, B)
    assert C.nnz == 1 and C.values[0] == 0.0


@pytest.mark.parametrize("shape", [(1, 1, 1), (3, 7, 2), (20, 20, 20), (50, 13, 41)])
def test_spgemm_matches_dense(rng, shape):
    m, k, n = shape
    for density in (0.05, 0.3, 1.0):
        A, Ad = random_sparse(rng, m, k, density)
        B, Bd = random_sparse(rng, k, n, density)
        C = spgemm(A, B)
        C.check()
        ref = Ad @ Bd
        scale = max(np.abs(ref).max(), 1.0)
        assert np.abs(C.todense() - ref).max() <= 1e-12 * scale


def test_galerkin_examples(rng):
    A = CSRMatrix.from_dense([[2.0, -1.0], [-1.0, 2.0]])
    P = CSRMatrix.from_dense([[1.0], [1.0]])
    assert_array_equal(galerkin_product(transpose(P), A, P).todense(), [[2.0]])
    B, Bd = random_sparse(rng, 6, 6)
    assert_array_equal(galerkin_product(identity(6), B, identity(6)).todense(), Bd)


def test_galerkin_of_symmetric_is_symmetric(rng):
    for _ in range(10):
        _, L = random_sparse(rng, 20, 20, 0.15)
        dense = L @ L.T + 20 * np.eye(20)
        A = CSRMatrix.from_dense(dense)
        agg = rng.integers(0, 6, 20)
        Pd = np.zeros((20, 6))
        Pd[np.arange(20), agg] = 1.0
        P = CSRMatrix.from_dense(Pd)
        C = galerkin_product(transpose(P), A, P).todense()
        ref = Pd.T @ dense @ Pd
        assert_allclose(C, ref, rtol=0, atol=1e-12 * np.abs(ref).max())
        assert np.abs(C - C.T).max() <= 1e-12 * np.abs(C).max()


def test_galerkin_dimension_mismatch():
    with pytest.raises(DimensionError):
        galerkin_product(identity(2), identity(3), identity(3))


def test_diagonal_with_missing_entries():
    A = CSRMatrix.from_dense([[0.0, 1.0], [2.0, 3.0]])
    assert_array_equal(diagonal(A), [0.0, 3.0])


def test_single_precision_structure(rng):
    A, Ad = random_sparse(rng, 15, 10, 0.3, np.float32)
    B, Bd = random_sparse(rng, 10, 8, 0.3, np.float32)
    C = spgemm(A, B)
    assert C.dtype == np.float32
    C.check()
    assert_allclose(C.todense(), Ad @ Bd, rtol=1e-5, atol=1e-5)
    assert_array_equal(transpose(A).todense(), Ad.T)


def test_matrices_are_read_only():
    A = identity(3)
    with pytest.raises(ValueError):
        A.values[0] = 2.0


def test_dense_round_trip_of_all_patterns():
    for bits in itertools.product([0.0, 1.5], repeat=4):
        dense = np.array(bits).reshape(2, 2)
        A = CSRMatrix.from_dense(dense)
        A.check()
        assert_array_equal(A.todense(), dense)
