import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from expmontel import (
    ExpPoly,
    IllConditionedProjection,
    InsufficientBox,
    NoAnnihilator,
    PhiTable,
    Profile,
    RecoveryConfig,
    SampledFunction,
    annihilator_roots,
    apply_polynomial,
    apply_sampled,
    certify_witness,
    evaluate,
    exact_lift,
    random_instance,
    recover,
    sample,
    section_annihilator,
    split_spectrum,
    unit_shifts,
)

from conftest import mono, q


def fsample(f, lo, hi):
    return sample(f, lo, hi, exact_values=False)


def max_rel_error(dec, s):
    fit = np.array([complex(evaluate(dec.result, p)) for p in s.box.points()]).reshape(s.values.shape)
    return float(np.abs(fit - s.values).max()) / max(1.0, s.max_abs())


# --- config -------------------------------------------------------------------


@pytest.mark.parametrize("kw", [{"max_order": 0}, {"rank_tol": 0.0}, {"cluster_tol": -1.0},
                                {"residual_tol": float("nan")}, {"max_order": 2.5}])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        RecoveryConfig(**kw)


def test_config_json_mirrors_field_names():
    assert set(RecoveryConfig().to_json()) == {"max_order", "rank_tol", "cluster_tol", "residual_tol"}


# --- section_annihilator ----------------------------------------------------------


def test_annihilator_single_exponential():
    qc = section_annihilator(fsample(mono([3]), (0,), (6,)), 0, RecoveryConfig(max_order=3))
    np.testing.assert_allclose(qc, [-3, 1], atol=1e-9)


def test_annihilator_with_multiplicity():
    s = fsample(mono([2]) + mono([1], (1,)), (0,), (10,))
    qc = section_annihilator(s, 0, RecoveryConfig(max_order=5))
    # (x - 2)(x - 1)^2
    np.testing.assert_allclose(qc, [-2, 5, -4, 1], atol=1e-7)


def test_annihilator_zero_samples():
    s = fsample(ExpPoly.zero(1), (0,), (6,))
    np.testing.assert_array_equal(section_annihilator(s, 0, RecoveryConfig(max_order=3)), [1])


def test_annihilator_box_too_short():
    with pytest.raises(InsufficientBox):
        section_annihilator(fsample(mono([3]), (0,), (5,)), 0, RecoveryConfig(max_order=3))


def test_annihilator_degree_too_high():
    s = fsample(mono([2]) + mono([3]) + mono([q(1, 1)]), (0,), (12,))
    with pytest.raises(NoAnnihilator):
        section_annihilator(s, 0, RecoveryConfig(max_order=2))


def test_annihilator_along_diagonal_shift():
    s = fsample(mono([2, 3]), (0, 0), (6, 6))
    qc = section_annihilator(s, (1, 1), RecoveryConfig(max_order=2))
    np.testing.assert_allclose(qc, [-6, 1], atol=1e-9)


def test_annihilator_stacks_sections():
    s = fsample(mono([2, 3], (1, 0)) + mono([q(1, 2), 3]), (0, 0), (8, 8))
    qc = section_annihilator(s, 1, RecoveryConfig(max_order=4))
    np.testing.assert_allclose(qc, [-3, 1], atol=1e-8)


@pytest.mark.parametrize("seed", range(15))
def test_annihilator_leaves_small_residual(seed):
    inst = random_instance(seed, Profile(dim=1, terms=3, degree=2))
    s = inst.samples
    cfg = RecoveryConfig(max_order=inst.order)
    qc = section_annihilator(s, 0, cfg)
    roots = annihilator_roots(qc, s, 0, cfg)
    out = s
    for c, m in roots:
        out = apply_sampled(out, PhiTable({(1,): c}), (1,), m)
    # the same operator through the polynomial route
    alt = apply_polynomial(s, qc, 0)
    scale = s.max_abs() * max(1.0, float(np.abs(qc).max()))
    assert float(np.abs(out.values).max()) <= cfg.rank_tol * scale
    assert float(np.abs(alt.values).max()) <= cfg.rank_tol * scale


# --- roots ---------------------------------------------------------------------


def test_roots_cluster_multiplicity():
    s = fsample(mono([2], (2,)) + mono([-1]), (0,), (14,))
    cfg = RecoveryConfig(max_order=4)
    roots = annihilator_roots(section_annihilator(s, 0, cfg), s, 0, cfg)
    assert [m for _, m in roots] == [1, 3]
    assert abs(roots[0][0] + 1) < 1e-6 and abs(roots[1][0] - 2) < 1e-6


# --- split_spectrum -------------------------------------------------------------


def test_split_two_exponentials():
    s = fsample(mono([2]) + mono([3]), (0,), (9,))
    parts = split_spectrum(s, 0, [(2, 1), (3, 1)], RecoveryConfig())
    assert len(parts) == 2
    for part, lam in zip(parts, (2, 3)):
        want = np.array([lam**n for n in range(part.lo[0], part.hi[0] + 1)], dtype=complex)
        assert np.abs(part.values - want).max() <= 1e-8 * np.abs(want).max()


def test_split_single_root_returns_input():
    s = fsample(mono([2], (1,)), (0,), (9,))
    parts = split_spectrum(s, 0, [(2, 2)], RecoveryConfig())
    assert len(parts) == 1 and np.array_equal(parts[0].values, s.values)


def test_split_zero_samples():
    s = fsample(ExpPoly.zero(1), (0,), (9,))
    parts = split_spectrum(s, 0, [(2, 1), (3, 1)], RecoveryConfig())
    assert all(not np.any(p.values) for p in parts)


def test_split_components_sum_to_input():
    f = mono([2, 1], (0, 1)) + mono([q(-1, 1), 2]) + mono([q(1, 2), 3], (1, 0))
    s = fsample(f, (0, 0), (11, 11))
    roots = [(2, 1), (complex(-1, 1), 1), (0.5, 2)]
    parts = split_spectrum(s, 0, roots, RecoveryConfig())
    total = sum(p.values for p in parts)
    ref = s.values[: parts[0].values.shape[0]]
    assert np.abs(total - ref).max() <= 1e-9 * s.max_abs()


def test_split_needs_axis():
    s = fsample(mono([2, 3]), (0, 0), (5, 5))
    with pytest.raises(ValueError):
        split_spectrum(s, (1, 1), [(6, 1)], RecoveryConfig())


def test_split_rejects_nearly_equal_roots():
    s = fsample(mono([2]), (0,), (9,))
    with pytest.raises(IllConditionedProjection):
        split_spectrum(s, 0, [(2, 3), (2 + 1e-7, 3)], RecoveryConfig())


# --- recover ---------------------------------------------------------------------


def test_recover_two_exponentials():
    s = fsample(mono([2]) + mono([3]), (0,), (9,))
    dec = recover(s)
    assert dec.success and dec.residual <= 1e-10
    got = sorted((complex(t.witness.lam[0]).real, complex(t.coeffs[(0,)])) for t in dec.result.terms)
    assert [round(v, 9) for v, _ in got] == [2, 3]
    assert all(abs(c - 1) < 1e-9 for _, c in got)


def test_recover_two_dimensional():
    s = fsample(mono([2, 3], (1, 0)), (0, 0), (8, 8))
    dec = recover(s)
    assert dec.success and dec.residual <= 1e-8
    (t,) = dec.result.terms
    assert np.allclose([complex(v) for v in t.witness.lam], [2, 3], atol=1e-9)
    assert list(t.coeffs) == [(1, 0)]
    assert abs(complex(t.coeffs[(1, 0)]) - 1) < 1e-9


def test_recover_zero_samples():
    dec = recover(fsample(ExpPoly.zero(2), (0, 0), (5, 5)))
    assert dec.result.terms == () and dec.residual == 0 and dec.success


def test_recover_json_shape():
    dec = recover(fsample(mono([2]) + mono([3]), (0,), (9,)))
    data = dec.to_json()
    assert {"result", "roots", "residual", "relative_residual", "success", "flags"} <= set(data)
    assert ExpPoly.from_json(data["result"]).dim == 1


def test_recover_flags_residual_when_underfit():
    s = fsample(mono([2]) + mono([3]) + mono([q(1, 1)]), (0,), (12,))
    with pytest.raises(NoAnnihilator):
        recover(s, RecoveryConfig(max_order=2))


def test_recover_exact_lift():
    f = mono([q(1, 2)], (1,)) + mono([q(-3, 2)])
    s = fsample(f, (0,), (11,))
    dec = recover(s)
    assert dec.exact is not None and dec.exact == f
    assert exact_lift(dec.result, s) == f


def test_recover_without_lift_keeps_float():
    s = fsample(mono([2]) + mono([3]), (0,), (9,))
    dec = recover(s, RecoveryConfig(exact_lift=False))
    assert dec.exact is None and dec.success


@pytest.mark.parametrize("seed", range(30))
def test_round_trip(seed):
    inst = random_instance(seed, Profile(dim=1 + seed % 2, terms=3, degree=2, separation=0.1))
    dec = recover(inst.samples, RecoveryConfig(max_order=inst.order))
    assert dec.success
    assert max_rel_error(dec, inst.samples) <= 1e-8
    assert len(dec.result.terms) == len(inst.f.terms)
    for t in inst.f.terms:
        dist = min(max(abs(complex(a) - complex(b)) for a, b in zip(t.witness.lam, u.witness.lam))
                   for u in dec.result.terms)
        assert dist <= 1e-6


@pytest.mark.parametrize("seed", range(10))
def test_witnesses_interpolate_certified_roots(seed):
    inst = random_instance(seed, Profile(dim=1 + seed % 2, terms=2, degree=1))
    cfg = RecoveryConfig(max_order=inst.order)
    dec = recover(inst.samples, cfg)
    shifts = unit_shifts(inst.f.dim)
    cand = certify_witness(inst.samples, shifts, inst.order, cfg)
    for t in dec.result.terms:
        for k, h in enumerate(shifts):
            target = complex(t.witness(h))
            assert min(abs(complex(v) - target) for v, _ in cand.roots[k]) <= cfg.cluster_tol


@given(st.integers(-3, 3).filter(bool), st.integers(0, 2), st.integers(1, 4))
def test_recover_single_monomial(lam, deg, c):
    s = fsample(mono([lam], (deg,), c), (0,), (15,))
    dec = recover(s, RecoveryConfig(max_order=deg + 1))
    assert dec.success
    (t,) = dec.result.terms
    assert abs(complex(t.witness.lam[0]) - lam) < 1e-6
