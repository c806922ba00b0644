import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expmontel import (
    Box,
    DiffProduct,
    ExpPoly,
    InsufficientBox,
    MissingPhiValue,
    OpFactor,
    PhiTable,
    SampledFunction,
    Witness,
    apply_modified,
    apply_product,
    apply_product_sampled,
    apply_sampled,
    difmod_identity_check,
    evaluate,
    linear_combine,
    plain_difference,
    sample,
    translate,
)

from conftest import exact_exppolys, mono, points, q, small_rational

W2 = Witness((q(2),))
W3 = Witness((q(3),))


def zeros_like_box(s):
    return all(not v for v in s.values.flat)


# --- apply_modified -----------------------------------------------------------


def test_modified_single_power(n2n):
    assert apply_modified(n2n, W2, (1,), 1) == mono([2], c=2)


def test_modified_square_kills(n2n):
    assert apply_modified(n2n, W2, (1,), 2).terms == ()


@given(exact_exppolys(dim=2), points(2, -2, 2))
def test_modified_with_unit_value_is_plain_difference(f, y):
    one = Witness((q(1), q(1)))
    assert apply_modified(f, one, y, 1) == translate(f, y) - f


def test_modified_never_adds_witnesses():
    f = mono([2], (2,)) + mono([3], (1,))
    g = apply_modified(f, Witness((q(5),)), (2,), 3)
    assert {t.witness.lam for t in g.terms} <= {t.witness.lam for t in f.terms}


# --- apply_product ------------------------------------------------------------


def test_empty_product_is_identity(n2n):
    assert apply_product(n2n, DiffProduct(())) == n2n


def test_product_kills_two_exponentials():
    f = mono([2]) + mono([3])
    P = DiffProduct((OpFactor(W2, (1,), 1), OpFactor(W3, (1,), 1)))
    assert apply_product(f, P).terms == ()


def test_product_single_factor_leaves_other_exponential():
    f = mono([2]) + mono([3])
    assert apply_product(f, DiffProduct((OpFactor(W2, (1,), 1),))) == mono([3])


def test_product_json_round_trip():
    data = {"factors": [{"lambda": [["2/1", "0/1"]], "shift": [1], "power": 2},
                        {"phi": [{"y": [1], "value": ["3/1", "0/1"]}], "shift": [1], "power": 1}]}
    assert DiffProduct.from_json(data).to_json() == data


# --- apply_sampled ------------------------------------------------------------


def test_sampled_constant_difference():
    s = sample(mono([1]), (0,), (9,))
    out = apply_sampled(s, PhiTable({(1,): q(1)}), (1,), 1)
    assert (out.lo, out.hi) == ((0,), (8,))
    assert zeros_like_box(out)


def test_sampled_n2n_square(n2n):
    s = sample(n2n, (0,), (9,))
    out = apply_sampled(s, PhiTable({(1,): q(2)}), (1,), 2)
    assert (out.lo, out.hi) == ((0,), (7,))
    assert zeros_like_box(out)


def test_sampled_box_too_small():
    s = sample(mono([2]), (0,), (3,))
    with pytest.raises(InsufficientBox):
        apply_sampled(s, PhiTable({(1,): q(2)}), (1,), 5)


def test_sampled_missing_phi_value():
    s = sample(mono([2]), (0,), (3,))
    with pytest.raises(MissingPhiValue):
        apply_sampled(s, PhiTable({(2,): q(2)}), (1,), 1)


def test_sampled_negative_shift_box():
    s = sample(mono([2, 3], (1, 0)), (0, 0), (4, 4))
    out = apply_sampled(s, Witness((q(2), q(3))), (1, -1), 1)
    assert (out.lo, out.hi) == ((0, 1), (3, 4))


def test_sampled_json_round_trip():
    s = sample(mono([2], (1,)), (0,), (4,))
    back = SampledFunction.from_json(s.to_json())
    assert back.exact and list(back.values) == list(s.values)


@given(exact_exppolys(dim=2, max_terms=3, max_degree=2), points(2, -2, 2), st.integers(1, 3), small_rational())
def test_sampled_agrees_with_symbolic_exact(f, y, p, c):
    s = sample(f, (-3, -3), (4, 4))
    got = apply_sampled(s, PhiTable({y: c}), y, p)
    g = apply_product(f, DiffProduct((OpFactor(PhiTable({y: c}), y, p),)))
    for x in got.box.points():
        assert got.at(x) == evaluate(g, x)


@given(exact_exppolys(dim=1, max_terms=3, max_degree=2), st.integers(1, 2), st.integers(1, 3))
def test_sampled_agrees_with_symbolic_float(f, y, p):
    ff = f.to_float()
    s = sample(ff, (0,), (12,))
    w = Witness((complex(1.5, 0.25),))
    got = apply_sampled(s, w, (y,), p)
    want = sample(apply_modified(ff, w, (y,), p), got.lo, got.hi)
    scale = max(1.0, float(np.max(np.abs(s.values))))
    assert np.max(np.abs(got.values - want.values)) <= 1e-10 * scale * 2**p


# --- properties ---------------------------------------------------------------


@given(exact_exppolys(dim=2, max_terms=3), st.lists(points(2, -2, 2), min_size=2, max_size=3), st.data())
def test_product_order_does_not_matter(f, shifts, data):
    lam = [data.draw(small_rational(nonzero=True)) for _ in range(2)]
    factors = [OpFactor(Witness(tuple(lam)), y, data.draw(st.integers(1, 2))) for y in shifts]
    results = {apply_product(f, DiffProduct(tuple(p))).to_json().__repr__()
               for p in itertools.permutations(factors)}
    assert len(results) == 1


@given(exact_exppolys(dim=2, max_terms=3), points(2, -2, 2))
def test_each_term_killed_by_its_own_witness(f, y):
    if not any(y):
        y = (1, 0)
    for t in f.terms:
        single = ExpPoly(2, (t,))
        assert apply_modified(single, t.witness, y, t.degree + 1).terms == ()


@given(exact_exppolys(dim=1), exact_exppolys(dim=1), st.integers(-3, 3), points(1, -2, 2))
def test_product_is_linear(f, g, a, y):
    P = DiffProduct((OpFactor(Witness((q(3, 1),)), y, 2),))
    lhs = apply_product(linear_combine([(a, f), (1, g)]), P)
    rhs = linear_combine([(a, apply_product(f, P)), (1, apply_product(g, P))])
    assert lhs == rhs


# --- modified vs plain difference identity -----------------------------------


def test_identity_n2n(n2n):
    assert difmod_identity_check(n2n, Witness((q(5),)), [(1,), (1,)], Box((0,), (10,)))


def test_identity_zero_function():
    assert difmod_identity_check(ExpPoly.zero(2), Witness((q(2), q(-1))), [(1, 0), (1, 1)], Box((0, 0), (3, 3)))


def test_identity_3n_vanishes_on_both_sides():
    f = mono([3])
    w = Witness((q(3),))
    assert difmod_identity_check(f, w, [(1,)], Box((0,), (5,)))
    assert apply_modified(f, w, (1,), 1).terms == ()
    assert plain_difference(ExpPoly.zero(1) + mono([1]), [(1,)]).terms == ()


def test_identity_on_samples():
    s = sample(mono([2], (1,)) + mono([q(1, 1)]), (-2,), (8,))
    assert difmod_identity_check(s, Witness((q(3),)), [(1,), (2,)], Box((0,), (4,)))


def test_identity_samples_need_cover():
    s = sample(mono([2]), (0,), (4,))
    with pytest.raises(InsufficientBox):
        difmod_identity_check(s, Witness((q(3),)), [(1,), (2,)], Box((0,), (4,)))


def test_identity_rejects_table_phi(n2n):
    with pytest.raises(TypeError):
        difmod_identity_check(n2n, PhiTable({(1,): q(2)}), [(1,)], Box((0,), (3,)))


@given(exact_exppolys(dim=2, max_terms=2, max_degree=2), st.lists(points(2, -2, 2), min_size=1, max_size=3),
       st.tuples(small_rational(nonzero=True), small_rational(nonzero=True)))
def test_identity_holds_exactly(f, shifts, lam):
    assert difmod_identity_check(f, Witness(lam), shifts, Box((-1, -1), (1, 1)))
