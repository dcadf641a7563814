import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fbdof.ledger import (CANCEL_RTOL, KnowledgeSet, LinExpr, SourceAtom, cancel_known, combine,
                          coefficient_matrix, lin_map, pack, unpack)

from .conftest import crandn

coef = st.complex_numbers(min_magnitude=0.1, max_magnitude=10, allow_nan=False,
                          allow_infinity=False)
terms = st.dictionaries(st.integers(0, 20), coef, max_size=8)


def _values(n=21, seed=0):
    return crandn(np.random.default_rng(seed), n)


def _eval(e, v):
    return complex(np.sum(e.coefs * v[e.ids])) if len(e) else 0j


@settings(max_examples=60, deadline=None)
@given(terms, terms, coef, coef)
def test_linearity_under_evaluation(t1, t2, a, b):
    v = _values()
    e1, e2 = LinExpr.from_terms(t1), LinExpr.from_terms(t2)
    lhs = _eval(combine((a, b), (e1, e2)), v)
    rhs = a * _eval(e1, v) + b * _eval(e2, v)
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(terms)
def test_canonical_form(t):
    e = LinExpr.from_terms(t)
    assert np.all(np.diff(e.ids) > 0)
    assert np.all(e.coefs != 0)
    assert (e - e).is_zero()
    assert e + LinExpr() == e


@settings(max_examples=40, deadline=None)
@given(st.lists(terms, min_size=1, max_size=5))
def test_lin_map_matches_combine(exprs_t):
    exprs = [LinExpr.from_terms(t) for t in exprs_t]
    m = crandn(np.random.default_rng(len(exprs)), 3, len(exprs))
    out = lin_map(m, exprs)
    for r in range(3):
        assert out[r].allclose(combine(m[r], exprs), rtol=1e-9)


def test_immutable():
    e = LinExpr.atom(3, 2.0)
    with pytest.raises(AttributeError):
        e.ids = np.array([1])
    with pytest.raises(ValueError):
        e.ids[0] = 5


def test_atom_accessors():
    e = LinExpr.from_terms({5: 2.0, 1: 1j})
    assert e.ids.tolist() == [1, 5]
    assert e.coef(5) == 2.0
    assert e.coef(7) == 0j
    assert e.support == frozenset({1, 5})
    assert e.terms == {1: 1j, 5: 2.0}
    assert LinExpr.atom(2, 0) == LinExpr()
    assert (3 * e).coef(5) == 6.0
    assert (-e).coef(1) == -1j


def test_relative_cancellation_threshold():
    big = LinExpr.from_terms({0: 1e6, 1: 1.0})
    nearly = LinExpr.from_terms({0: 1e6 * (1 + 1e-13), 1: 0.0})
    diff = big - nearly
    assert diff.support == frozenset({1})
    assert CANCEL_RTOL == 1e-10


def test_with_new_atom_requires_larger_id():
    e = LinExpr.atom(4)
    assert e.with_new_atom(9, 0.5).coef(9) == 0.5
    with pytest.raises(ValueError):
        e.with_new_atom(2)


def test_pack_unpack_round_trip():
    exprs = [LinExpr.from_terms({1: 1.0, 3: 2j}), LinExpr(), LinExpr.atom(7, -1)]
    back = unpack(*pack(exprs))
    assert all(a == b for a, b in zip(exprs, back))
    assert unpack(*pack([])) == []


def test_source_atom_validation():
    with pytest.raises(ValueError):
        SourceAtom(0, "symbol", 0)
    with pytest.raises(ValueError):
        SourceAtom(0, "noise", 0, power=2.0)


def test_coefficient_matrix_nine_by_twelve(rng):
    # shape of a receiver's first-phase system in the M=2, N=3 example
    h = crandn(rng, 9, 12)
    noise_ids = list(range(100, 109))
    exprs = [LinExpr.from_terms({**{k: h[r, k] for k in range(12)}, noise_ids[r]: 1.0})
             for r in range(9)]
    a, rest = coefficient_matrix(exprs, range(12))
    assert a.shape == (9, 12)
    np.testing.assert_allclose(a, h)
    assert [e.support for e in rest] == [frozenset({n}) for n in noise_ids]
    # unknown order is respected
    a_rev, _ = coefficient_matrix(exprs, list(range(11, -1, -1)))
    np.testing.assert_allclose(a_rev, h[:, ::-1])
    with pytest.raises(ValueError):
        coefficient_matrix(exprs, [1, 1])


def test_cancel_known_removes_known_span():
    x, y, z = 0, 1, 2
    known = [LinExpr.from_terms({x: 1.0, y: 2.0})]
    target = LinExpr.from_terms({x: 3.0, y: 6.0, z: 1.0})
    out = cancel_known(target, known)
    assert out.support == frozenset({z})
    assert out.coef(z) == pytest.approx(1.0)


def test_cancel_known_leaves_unexplained_terms():
    known = [LinExpr.atom(0)]
    target = LinExpr.from_terms({0: 2.0, 1: 5.0})
    out = cancel_known(target, known)
    assert out == LinExpr.atom(1, 5.0)
    assert cancel_known(target, []) is target
    assert cancel_known(LinExpr.atom(9), known) == LinExpr.atom(9)


def test_cancel_known_explicit_elimination_set():
    known = [LinExpr.from_terms({0: 1.0, 2: 1.0})]
    target = LinExpr.from_terms({0: 1.0, 1: 1.0})
    out = cancel_known(target, known, eliminate=[0])
    assert out.support == frozenset({1, 2})


def test_knowledge_set_availability():
    ks = KnowledgeSet(0)
    ks.add("own", 0, LinExpr.atom(1))
    ks.add("feedback", 3, LinExpr.atom(2))
    assert len(ks.exprs(before=2)) == 1
    assert ks.atoms(before=3) == {1, 2}
    assert ks.exprs(label="feedback")[0] == LinExpr.atom(2)
