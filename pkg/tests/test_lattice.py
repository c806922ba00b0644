import pytest

from expmontel import generates_lattice, invariant_factors, unit_shifts


def test_unit_shifts_generate():
    for d in (1, 2, 3):
        assert generates_lattice(unit_shifts(d), d)
        assert invariant_factors(unit_shifts(d), d) == (1,) * d


def test_even_shift_does_not_generate():
    assert invariant_factors([(2,)], 1) == (2,)
    assert not generates_lattice([(2,)], 1)


def test_coprime_shifts_generate_z():
    assert generates_lattice([(4,), (6,), (9,)], 1)


def test_rank_deficit():
    assert invariant_factors([(1, 1), (2, 2)], 2) == (1, 0)
    assert not generates_lattice([(1, 1), (2, 2)], 2)


def test_skew_basis():
    assert generates_lattice([(2, 1), (1, 1)], 2)
    assert invariant_factors([(2, 0), (0, 3)], 2) == (1, 6)


def test_no_shifts():
    assert invariant_factors([], 2) == (0, 0)


def test_dimension_checked():
    with pytest.raises(ValueError):
        invariant_factors([(1, 0)], 3)
