import numpy as np
import pytest

from fbdof.complexla import (as_cmatrix, gaussian_matrix, haar_isometry, is_full_column_rank,
                             logdet_hpd, min_singular_value, numerical_rank, orth_complement,
                             pseudo_inverse, rank_margin, singular_values, solve_least_squares)
from fbdof.errors import DimensionError, DomainError, SingularSystemError

from .conftest import crandn


def test_as_cmatrix_shapes_and_values():
    assert as_cmatrix(np.arange(3)).shape == (3, 1)
    with pytest.raises(DimensionError):
        as_cmatrix(np.zeros((0, 3)))
    with pytest.raises(DimensionError):
        as_cmatrix(np.zeros((2, 2, 2)))
    with pytest.raises(DomainError):
        as_cmatrix([[1.0, np.nan]])


def test_gaussian_matrix_statistics(rng):
    g = gaussian_matrix(200, 200, rng)
    assert g.dtype == np.complex128
    assert np.mean(np.abs(g) ** 2) == pytest.approx(1.0, rel=0.02)
    assert abs(np.mean(g)) < 0.02


def test_haar_isometry_is_orthonormal(rng):
    u = haar_isometry(4, 4, rng)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(4), atol=1e-12)
    w = haar_isometry(2, 3, rng)
    np.testing.assert_allclose(w @ w.conj().T, np.eye(2), atol=1e-12)
    # every square minor of a generic isometry is invertible
    for drop in range(3):
        assert abs(np.linalg.det(np.delete(w, drop, axis=1))) > 1e-8


def test_singular_values_sorted(rng):
    s = singular_values(crandn(rng, 6, 4))
    assert s.shape == (4,)
    assert np.all(np.diff(s) <= 0)


def test_rank_margin_and_full_rank(rng):
    a = crandn(rng, 9, 12)
    assert rank_margin(a) == 0.0
    assert min_singular_value(a) == 0.0
    assert not is_full_column_rank(a)
    b = crandn(rng, 12, 9)
    assert rank_margin(b) > 1e-3
    assert is_full_column_rank(b)
    b[:, 3] = b[:, 0] + 2 * b[:, 1]
    assert not is_full_column_rank(b)
    assert numerical_rank(b) == 8
    assert rank_margin(np.zeros((3, 2))) == 0.0


def test_solve_least_squares_square_and_tall(rng):
    a = crandn(rng, 5, 5)
    x = crandn(rng, 5)
    np.testing.assert_allclose(solve_least_squares(a, a @ x), x, atol=1e-10)
    t = crandn(rng, 8, 3)
    x3 = crandn(rng, 3)
    np.testing.assert_allclose(solve_least_squares(t, t @ x3), x3, atol=1e-10)


def test_solve_least_squares_errors(rng):
    with pytest.raises(DimensionError):
        solve_least_squares(crandn(rng, 4, 2), np.ones(3))
    sing = np.ones((3, 2), dtype=complex)
    with pytest.raises(SingularSystemError):
        solve_least_squares(sing, np.ones(3))
    with pytest.raises(np.linalg.LinAlgError):
        solve_least_squares(sing, np.ones(3))


def test_pseudo_inverse_is_left_inverse(rng):
    a = crandn(rng, 6, 4)
    np.testing.assert_allclose(pseudo_inverse(a) @ a, np.eye(4), atol=1e-10)


def test_logdet_hpd(rng):
    a = crandn(rng, 4, 4)
    h = a @ a.conj().T + np.eye(4)
    assert logdet_hpd(h) == pytest.approx(np.linalg.slogdet(h)[1])
    assert logdet_hpd(np.eye(3)) == 0.0
    with pytest.raises(DomainError):
        logdet_hpd(a)  # not Hermitian
    with pytest.raises(DomainError):
        logdet_hpd(-np.eye(2))
    with pytest.raises(DimensionError):
        logdet_hpd(crandn(rng, 2, 3))


def test_orth_complement(rng):
    a = crandn(rng, 7, 3)
    q = orth_complement(a)
    assert q.shape == (7, 4)
    np.testing.assert_allclose(q.conj().T @ a, 0, atol=1e-12)
    np.testing.assert_allclose(q.conj().T @ q, np.eye(4), atol=1e-12)
    assert orth_complement(np.zeros((5, 0))).shape == (5, 5)
    dup = np.hstack([a, a[:, :1]])
    assert orth_complement(dup).shape == (7, 4)
