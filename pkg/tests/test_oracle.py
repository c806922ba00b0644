import json
from pathlib import Path

import numpy as np
import pytest

from expmontel import (
    DiffProduct,
    ExpPoly,
    FiniteGroupSpec,
    InsufficientBox,
    OpFactor,
    PhiTable,
    Profile,
    SizeBoundExceeded,
    Witness,
    apply_product_sampled,
    brute_apply,
    fixpoint_closure,
    frechet_nullspaces,
    random_exppoly,
    random_instance,
    sample,
)
from expmontel.oracle import load_instance

from conftest import mono, q

GOLDEN = Path(__file__).parent / "data" / "golden"


# --- finite groups --------------------------------------------------------------


def test_group_parse_and_arithmetic():
    G = FiniteGroupSpec.parse("2,3")
    assert G.order == 6
    assert G.elements()[:3] == [(0, 0), (0, 1), (0, 2)]
    assert G.add((1, 2), (1, 2)) == (0, 1)
    table = G.addition_table()
    assert table.shape == (6, 6)
    assert all(G.elements()[table[i, j]] == G.add(G.elements()[i], G.elements()[j])
               for i in range(6) for j in range(6))


def test_group_size_bound():
    with pytest.raises(SizeBoundExceeded):
        FiniteGroupSpec((64, 65))


@pytest.mark.parametrize("text", ["0", "a", "", "3,-1"])
def test_group_bad_spec(text):
    with pytest.raises(ValueError):
        FiniteGroupSpec.parse(text)


# --- brute_apply ------------------------------------------------------------------


def test_brute_constant_difference():
    s = sample(mono([1]), (0,), (6,))
    out = brute_apply(s, DiffProduct((OpFactor(PhiTable({(1,): q(1)}), (1,), 1),)))
    assert all(v == 0 for v in out.values.flat)


def test_brute_n2n_square(n2n):
    s = sample(n2n, (0,), (5,))
    out = brute_apply(s, DiffProduct((OpFactor(PhiTable({(1,): q(2)}), (1,), 2),)))
    assert out.lo == (0,) and out.hi == (3,)
    assert all(v == 0 for v in out.values.flat)


def test_brute_by_hand_first_points(n2n):
    # Delta_{2;1} (n 2^n) = 2^{n+1}: values 2, 4, 8 at n = 0, 1, 2
    s = sample(n2n, (0,), (3,))
    out = brute_apply(s, DiffProduct((OpFactor(PhiTable({(1,): q(2)}), (1,), 1),)))
    assert list(out.values.flat)[:3] == [2, 4, 8]


def test_brute_box_too_small():
    s = sample(mono([2]), (0,), (2,))
    with pytest.raises(InsufficientBox):
        brute_apply(s, DiffProduct((OpFactor(PhiTable({(1,): q(2)}), (1,), 3),)))


def test_brute_on_group_table():
    G = FiniteGroupSpec((4,))
    table = [q(1)] * 4
    out = brute_apply(table, DiffProduct((OpFactor(PhiTable({(1,): q(1)}), (1,), 1),)), G)
    assert out == [0, 0, 0, 0]
    chars = [q(0, 1) ** k for k in range(4)]  # x -> i^x is a character of Z_4
    out = brute_apply(chars, DiffProduct((OpFactor(PhiTable({(1,): q(0, 1)}), (1,), 1),)), G)
    assert out == [0, 0, 0, 0]


def _random_exact_case(rng):
    dim = int(rng.integers(1, 3))
    f = random_exppoly(rng, Profile(dim=dim, terms=2, degree=2, backend="exact"))
    factors = []
    for _ in range(int(rng.integers(1, 4))):
        y = tuple(int(v) for v in rng.integers(-1, 2, size=dim))
        c = q(int(rng.integers(-3, 4)), int(rng.integers(-1, 2)))
        factors.append(OpFactor(PhiTable({y: c}), y, int(rng.integers(1, 3))))
    lo = tuple(int(v) for v in rng.integers(-2, 1, size=dim))
    side = 7 if dim == 1 else 5
    return sample(f, lo, tuple(a + side for a in lo)), DiffProduct(tuple(factors))


def test_brute_matches_apply_sampled_bit_for_bit():
    rng = np.random.default_rng(2024)
    checked = 0
    for _ in range(500):
        s, P = _random_exact_case(rng)
        try:
            want = brute_apply(s, P)
        except InsufficientBox:
            with pytest.raises(InsufficientBox):
                apply_product_sampled(s, P)
            continue
        got = apply_product_sampled(s, P)
        assert (got.lo, got.hi) == (want.lo, want.hi)
        assert list(got.values.flat) == list(want.values.flat)
        checked += 1
    assert checked >= 400


# --- Frechet equations ----------------------------------------------------------


def test_frechet_z4_first_order():
    res = frechet_nullspaces(FiniteGroupSpec((4,)), 1)
    assert (res.dim1, res.dim2, res.equal) == (1, 1, True)
    assert res.exact and not res.sampled


def test_frechet_klein_zero_order():
    res = frechet_nullspaces(FiniteGroupSpec((2, 2)), 0)
    assert res.equal and res.dim1 == res.dim2


def test_frechet_z5_second_order():
    res = frechet_nullspaces(FiniteGroupSpec((5,)), 2)
    assert res.equal and res.dim1 == res.dim2 == 1


def test_frechet_float_path_agrees():
    G = FiniteGroupSpec((3, 4))
    a = frechet_nullspaces(G, 2, exact=True)
    b = frechet_nullspaces(G, 2, exact=False)
    assert (a.dim1, a.dim2, a.equal) == (b.dim1, b.dim2, b.equal)


@pytest.mark.parametrize("moduli", [(2, 2, 2), (2, 2, 4), (2, 2, 8), (2, 4, 4), (2, 2, 2, 2), (3, 3, 3), (2, 2, 6)])
@pytest.mark.parametrize("n", [0, 1, 2])
def test_frechet_more_factors(moduli, n):
    assert frechet_nullspaces(FiniteGroupSpec(moduli), n).equal


def test_frechet_sampled_tuples_flagged():
    res = frechet_nullspaces(FiniteGroupSpec((2, 64)), 2, exact=False)
    assert res.sampled and res.equal


def test_frechet_negative_order():
    with pytest.raises(ValueError):
        frechet_nullspaces(FiniteGroupSpec((3,)), -1)


def test_frechet_json_keys():
    data = frechet_nullspaces(FiniteGroupSpec((3,)), 1).to_json()
    assert {"dim1", "dim2", "equal"} <= set(data)


# --- random instances -----------------------------------------------------------


@pytest.mark.parametrize("seed", range(10))
def test_random_instance_matches_golden(seed):
    data = json.loads((GOLDEN / f"instance_{seed:02d}.json").read_text())
    assert data["profile"] == Profile().to_json()
    inst = random_instance(seed)
    assert inst.to_json() == data["instance"]
    head = [[v.real, v.imag] for v in inst.samples.values.flat[:4]]
    np.testing.assert_allclose(head, data["samples_head"], rtol=1e-12)
    again = load_instance(data["instance"])
    assert again.f == inst.f


def test_random_instance_is_deterministic():
    p = Profile(dim=2, terms=3, degree=2)
    assert random_instance(7, p).to_json() == random_instance(7, p).to_json()


@pytest.mark.parametrize("seed", range(25))
def test_random_instance_separation(seed):
    p = Profile(dim=2, terms=3, min_terms=3, separation=0.5)
    ws = random_instance(seed, p).f.witnesses
    for i in range(len(ws)):
        for j in range(i):
            assert max(abs(complex(a) - complex(b)) for a, b in zip(ws[i].lam, ws[j].lam)) >= 0.5


def test_random_instance_pure_exponential():
    inst = random_instance(3, Profile(terms=1, degree=0))
    (t,) = inst.f.terms
    assert list(t.coeffs) == [(0,)]


def test_random_instance_box_fits_order():
    inst = random_instance(5, Profile(dim=1, terms=3, min_terms=3, degree=3, min_side=4))
    assert inst.hi[0] - inst.lo[0] + 1 >= 2 * inst.order + 2


# --- fixpoint closure -----------------------------------------------------------


def test_fixpoint_closure_block():
    from expmontel import SpanSpace

    V = SpanSpace.span(1, [mono([2], (2,))])
    W = fixpoint_closure(V, [OpFactor(Witness((q(7),)), (1,))])
    assert W.dim == 3
    assert W.contains(mono([2])) and W.contains(mono([2], (1,)))


def test_fixpoint_closure_zero_space():
    from expmontel import SpanSpace

    assert fixpoint_closure(SpanSpace(1), [OpFactor(Witness((q(2),)), (1,))]).dim == 0


def test_exppoly_zero_helper():
    assert ExpPoly.zero(3).terms == ()
