"""Small dense complex linear algebra used by every other module.

Matrices are plain 2-D ``complex128`` numpy arrays.
"""

import numpy as np

from . import kernels
from .errors import DimensionError, DomainError, SingularSystemError

#: relative rank threshold factor, scaled by max(rows, cols)
RANK_RTOL = 1e-8


def as_cmatrix(a):
    """Return ``a`` as a finite, non-empty 2-D complex128 array."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionError(f"expected a non-empty matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("matrix has non-finite entries")
    return arr


def gaussian_matrix(rows, cols, rng):
    """Draw a ``rows x cols`` matrix of i.i.d. CN(0, 1) entries.

    Real and imaginary parts are independent N(0, 1/2). One call consumes
    exactly ``2 * rows * cols`` standard normals from ``rng``.
    """
    if rows < 1 or cols < 1:
        raise DimensionError(f"gaussian_matrix needs positive dims, got {rows}x{cols}")
    raw = rng.standard_normal((rows, cols, 2))
    return (raw[..., 0] + 1j * raw[..., 1]) / np.sqrt(2.0)


def haar_isometry(rows, cols, rng):
    """Random ``rows x cols`` matrix with orthonormal rows (or columns if tall).

    Taken from a Haar-distributed unitary of size ``max(rows, cols)``, so any
    ``min(rows, cols)`` square minor is invertible with probability one while
    the matrix itself has condition number 1.
    """
    n = max(rows, cols)
    q, r = np.linalg.qr(gaussian_matrix(n, n, rng))
    d = np.diagonal(r)
    q = q * (d / np.abs(d))
    return q[:rows, :cols]


def singular_values(a):
    """Singular values of ``a`` in descending order."""
    return kernels.singular_values(as_cmatrix(a))


def min_singular_value(a):
    """Smallest singular value (zero for column-rank-deficient wide input)."""
    a = as_cmatrix(a)
    s = kernels.singular_values(a)
    if a.shape[0] < a.shape[1]:
        return 0.0
    return float(s[-1])


def rank_margin(a):
    """Ratio of smallest to largest singular value, 0 when wide or all-zero."""
    a = as_cmatrix(a)
    if a.shape[0] < a.shape[1]:
        return 0.0
    s = kernels.singular_values(a)
    if s[0] == 0.0:
        return 0.0
    return float(s[-1] / s[0])


def is_full_column_rank(a):
    a = as_cmatrix(a)
    rows, cols = a.shape
    if rows < cols:
        return False
    s = kernels.singular_values(a)
    return bool(s[-1] > RANK_RTOL * s[0] * max(rows, cols))


def numerical_rank(a, rtol=RANK_RTOL):
    a = as_cmatrix(a)
    s = kernels.singular_values(a)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0] * max(a.shape)))


def solve_least_squares(a, b):
    """Minimise ``||a x - b||`` for full-column-rank ``a``.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = as_cmatrix(a)
    b = np.asarray(b, dtype=np.complex128)
    if b.shape[0] != a.shape[0]:
        raise DimensionError(f"rhs has {b.shape[0]} rows, matrix has {a.shape[0]}")
    if not is_full_column_rank(a):
        raise SingularSystemError("least-squares matrix is column-rank deficient")
    x, *_ = np.linalg.lstsq(a, b, rcond=None)
    return x


def pseudo_inverse(a):
    """Left inverse of a full-column-rank matrix."""
    a = as_cmatrix(a)
    return solve_least_squares(a, np.eye(a.shape[0], dtype=np.complex128))


def logdet_hpd(a, atol=1e-9):
    """Natural-log determinant of a Hermitian positive-definite matrix."""
    a = as_cmatrix(a)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"logdet_hpd needs a square matrix, got {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(np.abs(a - a.conj().T)) > atol * scale:
        raise DomainError("matrix is not Hermitian")
    ok, value = kernels.cholesky_logdet(np.ascontiguousarray(a))
    if not ok:
        raise DomainError("matrix is not positive definite")
    return float(value)


def orth_complement(a, rtol=1e-9):
    """Orthonormal basis (columns) of the complement of ``col(a)``.

    ``a`` may have zero columns, in which case the identity is returned.
    """
    a = np.asarray(a, dtype=np.complex128)
    n = a.shape[0]
    if a.ndim != 2 or a.shape[1] == 0 or not np.any(a):
        return np.eye(n, dtype=np.complex128)
    u, s, _ = np.linalg.svd(a, full_matrices=True)
    r = int(np.sum(s > rtol * s[0] * max(a.shape)))
    return u[:, r:]
