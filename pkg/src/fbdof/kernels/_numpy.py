"""Pure-numpy implementations of the hot kernels.

Every function here has a twin with the same signature in ``_numba``.
"""

import numpy as np


def merge_terms(ids, coefs, rtol):
    """Sum duplicate atom ids and drop cancelled coefficients.

    A coefficient is dropped when its magnitude is at most ``rtol`` times the
    sum of the magnitudes that contributed to it (so exact zeros always go).
    """
    if ids.size == 0:
        return ids.copy(), coefs.copy()
    uniq, inv = np.unique(ids, return_inverse=True)
    n = uniq.size
    re = np.bincount(inv, weights=coefs.real, minlength=n)
    im = np.bincount(inv, weights=coefs.imag, minlength=n)
    mag = np.bincount(inv, weights=np.abs(coefs), minlength=n)
    out = re + 1j * im
    keep = np.abs(out) > rtol * mag
    return uniq[keep], out[keep]


def densify(indptr, ids, coefs):
    """Scatter CSR-packed expressions into a dense (rows x union) matrix.

    Returns the sorted union of atom ids and the dense coefficient matrix.
    """
    nrows = indptr.size - 1
    cols, inv = np.unique(ids, return_inverse=True)
    dense = np.zeros((nrows, cols.size), dtype=np.complex128)
    rows = np.repeat(np.arange(nrows), np.diff(indptr))
    dense[rows, inv] = coefs
    return cols, dense


def sparsify(dense, scale, cols, rtol):
    """Inverse of :func:`densify` with relative cancellation threshold."""
    keep = np.abs(dense) > rtol * scale
    r, c = np.nonzero(keep)
    indptr = np.zeros(dense.shape[0] + 1, dtype=np.int64)
    np.cumsum(np.bincount(r, minlength=dense.shape[0]), out=indptr[1:])
    return indptr, cols[c].astype(np.int64), dense[r, c]


def singular_values(a):
    return np.linalg.svd(a, compute_uv=False)


def cholesky_logdet(a):
    """Return (ok, logdet) for a Hermitian matrix via Cholesky."""
    try:
        chol = np.linalg.cholesky(a)
    except np.linalg.LinAlgError:
        return False, np.nan
    d = np.diag(chol).real
    if np.any(d <= 0.0) or not np.all(np.isfinite(d)):
        return False, np.nan
    return True, 2.0 * float(np.sum(np.log(d)))
