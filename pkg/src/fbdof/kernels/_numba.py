"""Numba-compiled twins of the kernels in ``_numpy``."""

import numpy as np
from numba import njit


@njit(cache=True)
def merge_terms(ids, coefs, rtol):
    n = ids.size
    out_ids = np.empty(n, dtype=np.int64)
    out_coefs = np.empty(n, dtype=np.complex128)
    if n == 0:
        return out_ids, out_coefs
    order = np.argsort(ids, kind="mergesort")
    k = 0
    cur = ids[order[0]]
    acc = 0j
    mag = 0.0
    for pos in range(n):
        i = order[pos]
        if ids[i] != cur:
            if abs(acc) > rtol * mag:
                out_ids[k] = cur
                out_coefs[k] = acc
                k += 1
            cur = ids[i]
            acc = 0j
            mag = 0.0
        acc += coefs[i]
        mag += abs(coefs[i])
    if abs(acc) > rtol * mag:
        out_ids[k] = cur
        out_coefs[k] = acc
        k += 1
    return out_ids[:k].copy(), out_coefs[:k].copy()


@njit(cache=True)
def densify(indptr, ids, coefs):
    nrows = indptr.size - 1
    cols = np.unique(ids)
    dense = np.zeros((nrows, cols.size), dtype=np.complex128)
    for r in range(nrows):
        for p in range(indptr[r], indptr[r + 1]):
            c = np.searchsorted(cols, ids[p])
            dense[r, c] += coefs[p]
    return cols, dense


@njit(cache=True)
def sparsify(dense, scale, cols, rtol):
    nrows, ncols = dense.shape
    indptr = np.zeros(nrows + 1, dtype=np.int64)
    out_ids = np.empty(nrows * ncols, dtype=np.int64)
    out_coefs = np.empty(nrows * ncols, dtype=np.complex128)
    k = 0
    for r in range(nrows):
        for c in range(ncols):
            v = dense[r, c]
            if abs(v) > rtol * scale[r, c]:
                out_ids[k] = cols[c]
                out_coefs[k] = v
                k += 1
        indptr[r + 1] = k
    return indptr, out_ids[:k].copy(), out_coefs[:k].copy()


@njit(cache=True)
def singular_values(a):
    return np.linalg.svd(np.ascontiguousarray(a), full_matrices=False)[1]


@njit(cache=True)
def _cholesky_diag(a):
    n = a.shape[0]
    lower = np.zeros((n, n), dtype=np.complex128)
    for j in range(n):
        s = a[j, j].real
        for k in range(j):
            s -= (lower[j, k] * np.conj(lower[j, k])).real
        if not s > 0.0:
            return False, lower
        ljj = np.sqrt(s)
        lower[j, j] = ljj
        for i in range(j + 1, n):
            acc = a[i, j]
            for k in range(j):
                acc -= lower[i, k] * np.conj(lower[j, k])
            lower[i, j] = acc / ljj
    return True, lower


@njit(cache=True)
def cholesky_logdet(a):
    ok, lower = _cholesky_diag(a)
    if not ok:
        return False, np.nan
    total = 0.0
    for j in range(a.shape[0]):
        total += np.log(lower[j, j].real)
    return True, 2.0 * total
