from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from expmontel import (
    DimensionMismatch,
    EvaluationOverflow,
    ExpPoly,
    GaussianRational,
    Witness,
    evaluate,
    grlex_key,
    linear_combine,
    monomials_upto,
    normalize,
    scalar_from_json,
    scalar_to_json,
    translate,
)

from conftest import exact_exppolys, mono, points, q


# --- scalars -----------------------------------------------------------------


def test_gaussian_rational_field_ops():
    a, b = q(Fraction(1, 2), 3), q(-2, Fraction(1, 3))
    assert (a * b) / b == a
    assert a + b - b == a
    assert (a * a.conjugate()).imag == 0


def test_scalar_json_round_trip():
    z = q(Fraction(-7, 3), Fraction(5, 4))
    assert scalar_from_json(scalar_to_json(z)) == z
    assert scalar_from_json(["1/2", "0"]) == q(Fraction(1, 2))
    assert scalar_from_json([0.5, 1.5]) == complex(0.5, 1.5)
    assert scalar_from_json(2, "float") == 2 + 0j


def test_scalar_json_rejects_bad_shape():
    with pytest.raises(ValueError):
        scalar_from_json([1, 2, 3])


# --- eval --------------------------------------------------------------------


def test_eval_zero_function():
    assert evaluate(ExpPoly.zero(1), (5,)) == 0


def test_eval_n_2n():
    assert evaluate(mono([2], (1,)), (3,)) == 24


def test_eval_two_dimensional():
    assert evaluate(mono([2, 3], (1, 0)), (2, 1)) == 24


def test_eval_negative_coordinates_exact():
    assert evaluate(mono([2], (1,)), (-2,)) == q(Fraction(-1, 2))


def test_eval_zero_power_convention():
    assert evaluate(mono([3], (0,)), (0,)) == 1
    assert evaluate(mono([3], (2,)), (0,)) == 0


def test_eval_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        evaluate(mono([2], (1,)), (1, 2))


def test_eval_float_overflow():
    f = ExpPoly.monomial(Witness((1e300 + 0j,)), (0,), 1.0 + 0j)
    with pytest.raises(EvaluationOverflow):
        evaluate(f, (5,))


def test_witness_rejects_zero_component():
    with pytest.raises(ValueError):
        Witness((q(0),))


# --- normalize ---------------------------------------------------------------


def test_normalize_merges_like_terms():
    f = normalize(ExpPoly(1, mono([2]).terms + mono([2]).terms))
    assert len(f.terms) == 1
    assert f.terms[0].coeffs == {(0,): 2}


def test_normalize_cancels_to_zero():
    f = normalize(ExpPoly(1, mono([2], (1,)).terms + mono([2], (1,), -1).terms))
    assert f.terms == ()


def test_normalize_keeps_distinct_witnesses():
    f = normalize(ExpPoly(1, mono([2]).terms + mono([3]).terms))
    assert len(f.terms) == 2


def test_normalize_float_merges_within_tolerance():
    a = ExpPoly.monomial(Witness((2.0 + 0j,)), (0,), 1.0 + 0j)
    b = ExpPoly.monomial(Witness((2.0 + 1e-12j,)), (0,), 1.0 + 0j)
    assert len(normalize(ExpPoly(1, a.terms + b.terms)).terms) == 1


# --- translate ---------------------------------------------------------------


def test_translate_pure_exponential():
    assert translate(mono([2]), (1,)) == mono([2], c=2)


def test_translate_by_zero_is_identity(n2n):
    assert translate(n2n, (0,)) == n2n


def test_translate_n_2n(n2n):
    assert translate(n2n, (1,)) == mono([2], (1,), 2) + mono([2], (0,), 2)


# --- linear_combine ----------------------------------------------------------


def test_linear_combine_cancels(n2n):
    assert linear_combine([(1, n2n), (-1, n2n)]).terms == ()


def test_linear_combine_scales():
    f = linear_combine([(2, mono([2]))])
    assert [t.witness.lam for t in f.terms] == [(2,)]
    assert f.terms[0].coeffs == {(0,): 2}


def test_linear_combine_merges_like_witness(n2n):
    f = linear_combine([(1, mono([2])), (1, n2n)])
    assert len(f.terms) == 1
    assert f.terms[0].coeffs == {(0,): 1, (1,): 1}


def test_linear_combine_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        linear_combine([(1, mono([2])), (1, mono([2, 3]))])


# --- ordering and serialization ---------------------------------------------


def test_monomials_are_graded_lex():
    monos = monomials_upto(2, 2)
    assert monos == sorted(monos, key=grlex_key)
    assert [sum(a) for a in monos] == [0, 1, 1, 2, 2, 2]


def test_json_round_trip_example():
    data = {"dim": 2, "terms": [{"lambda": [["2/1", "0/1"], ["3/1", "0/1"]],
                                 "coeffs": [{"alpha": [1, 0], "c": ["1/1", "0/1"]}]}]}
    f = ExpPoly.from_json(data)
    assert f == mono([2, 3], (1, 0))
    assert f.to_json() == data


# --- properties --------------------------------------------------------------


@given(exact_exppolys(dim=2), exact_exppolys(dim=2), st.integers(-3, 3), st.integers(-3, 3), points(2))
def test_eval_is_linear(f, g, a, b, x):
    h = linear_combine([(a, f), (b, g)])
    assert evaluate(h, x) == a * evaluate(f, x) + b * evaluate(g, x)


@given(exact_exppolys(dim=2), points(2, -2, 2), points(2, -2, 2))
def test_translations_compose(f, y, z):
    yz = tuple(a + b for a, b in zip(y, z))
    assert translate(translate(f, y), z) == translate(f, yz)


@given(exact_exppolys(dim=2), points(2, -2, 2), points(2))
def test_translate_shifts_argument(f, y, x):
    xy = tuple(a + b for a, b in zip(x, y))
    assert evaluate(translate(f, y), x) == evaluate(f, xy)


@given(exact_exppolys(), st.data())
def test_normalize_idempotent_and_eval_preserving(f, data):
    raw = ExpPoly(f.dim, f.terms + f.terms)
    once = normalize(raw)
    assert normalize(once).to_json() == once.to_json()
    x = data.draw(points(f.dim))
    assert evaluate(once, x) == evaluate(raw, x)


@given(st.lists(st.integers(-3, 3).filter(bool), min_size=1, max_size=3), st.data())
def test_witness_multiplicative(lam, data):
    w = Witness(tuple(q(v) for v in lam))
    x = data.draw(points(len(lam)))
    y = data.draw(points(len(lam)))
    assert w(tuple(a + b for a, b in zip(x, y))) == w(x) * w(y)


@given(exact_exppolys())
def test_json_round_trip_is_lossless(f):
    assert ExpPoly.from_json(f.to_json()) == f
