"""Compiled inner loops over raw CSR arrays.

Every kernel that works on a row range takes ``(start, stop)`` so that the
builtin backend can hand disjoint ranges to separate threads; all of them
release the GIL.
"""
import numpy as np
from numba import njit

_OPTS = dict(nogil=True, cache=True)


# ---------------------------------------------------------------------------
# sparse structural kernels

@njit(**_OPTS)
def spgemm_count(a_ptr, a_idx, b_ptr, b_idx, ncols, start, stop, row_nnz):
    marker = np.full(ncols, -1, dtype=np.int64)
    for i in range(start, stop):
        count = 0
        for jj in range(a_ptr[i], a_ptr[i + 1]):
            k = a_idx[jj]
            for kk in range(b_ptr[k], b_ptr[k + 1]):
                c = b_idx[kk]
                if marker[c] != i:
                    marker[c] = i
                    count += 1
        row_nnz[i] = count


@njit(**_OPTS)
def spgemm_fill(a_ptr, a_idx, a_val, b_ptr, b_idx, b_val, ncols, start, stop,
                c_ptr, c_idx, c_val):
    marker = np.full(ncols, -1, dtype=np.int64)
    for i in range(start, stop):
        head = c_ptr[i]
        pos = head
        for jj in range(a_ptr[i], a_ptr[i + 1]):
            k = a_idx[jj]
            av = a_val[jj]
            for kk in range(b_ptr[k], b_ptr[k + 1]):
                c = b_idx[kk]
                if marker[c] < head:
                    marker[c] = pos
                    c_idx[pos] = c
                    c_val[pos] = av * b_val[kk]
                    pos += 1
                else:
                    c_val[marker[c]] += av * b_val[kk]
        # rows are short; insertion sort keeps values attached to columns
        for p in range(head + 1, pos):
            col = c_idx[p]
            val = c_val[p]
            q = p - 1
            while q >= head and c_idx[q] > col:
                c_idx[q + 1] = c_idx[q]
                c_val[q + 1] = c_val[q]
                q -= 1
            c_idx[q + 1] = col
            c_val[q + 1] = val


# ---------------------------------------------------------------------------
# solve-phase primitives

@njit(**_OPTS)
def spmv_range(alpha, ptr, idx, val, x, beta, y, start, stop):
    for i in range(start, stop):
        s = 0.0
        for jj in range(ptr[i], ptr[i + 1]):
            s += val[jj] * x[idx[jj]]
        if beta == 0.0:
            y[i] = alpha * s
        else:
            y[i] = alpha * s + beta * y[i]


@njit(**_OPTS)
def residual_range(ptr, idx, val, x, f, r, start, stop):
    for i in range(start, stop):
        s = 0.0
        for jj in range(ptr[i], ptr[i + 1]):
            s += val[jj] * x[idx[jj]]
        r[i] = f[i] - s


@njit(**_OPTS)
def block_dots(x, y, block, partial, start, stop):
    n = x.shape[0]
    for b in range(start, stop):
        lo = b * block
        hi = min(lo + block, n)
        s = 0.0
        for i in range(lo, hi):
            s += x[i] * y[i]
        partial[b] = s


@njit(**_OPTS)
def axpby_range(a, x, b, y, start, stop):
    if b == 0.0:
        for i in range(start, stop):
            y[i] = a * x[i]
    else:
        for i in range(start, stop):
            y[i] = a * x[i] + b * y[i]


@njit(**_OPTS)
def axpbypcz_range(a, x, b, y, c, z, start, stop):
    if c == 0.0:
        for i in range(start, stop):
            z[i] = a * x[i] + b * y[i]
    else:
        for i in range(start, stop):
            z[i] = a * x[i] + b * y[i] + c * z[i]


@njit(**_OPTS)
def vmul_range(a, d, x, b, y, start, stop):
    if b == 0.0:
        for i in range(start, stop):
            y[i] = a * d[i] * x[i]
    else:
        for i in range(start, stop):
            y[i] = a * d[i] * x[i] + b * y[i]


# ---------------------------------------------------------------------------
# setup-phase helpers

@njit(**_OPTS)
def greedy_aggregate(ptr, idx, n):
    agg = np.full(n, -1, dtype=np.int64)
    count = 0
    # phase 1: roots whose whole strong neighbourhood is free
    for i in range(n):
        if agg[i] >= 0:
            continue
        free = True
        has_neighbour = False
        for jj in range(ptr[i], ptr[i + 1]):
            j = idx[jj]
            if j == i:
                continue
            has_neighbour = True
            if agg[j] >= 0:
                free = False
                break
        if free and has_neighbour:
            agg[i] = count
            for jj in range(ptr[i], ptr[i + 1]):
                agg[idx[jj]] = count
            count += 1
    return agg, count


@njit(**_OPTS)
def attach_leftovers(ptr, idx, val, agg, count):
    n = agg.shape[0]
    phase1 = agg.copy()
    # phase 2: join the aggregate of the strongest phase-1 neighbour
    for i in range(n):
        if phase1[i] >= 0:
            continue
        best = -1.0
        target = -1
        for jj in range(ptr[i], ptr[i + 1]):
            j = idx[jj]
            if j == i or phase1[j] < 0:
                continue
            w = abs(val[jj])
            if w > best:
                best = w
                target = phase1[j]
        if target >= 0:
            agg[i] = target
    # phase 3: singletons
    for i in range(n):
        if agg[i] < 0:
            agg[i] = count
            count += 1
    return agg, count


@njit(**_OPTS)
def gauss_seidel_sweep(ptr, idx, val, diag, f, u, forward):
    n = u.shape[0]
    for step in range(n):
        i = step if forward else n - 1 - step
        s = f[i]
        for jj in range(ptr[i], ptr[i + 1]):
            j = idx[jj]
            if j != i:
                s -= val[jj] * u[j]
        u[i] = s / diag[i]
