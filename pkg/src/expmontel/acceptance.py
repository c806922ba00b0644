"""Runners for the acceptance criteria, shared by ``expmontel selftest`` and the test suite.

Each runner returns a :class:`CriterionResult`; a criterion passes when its
property holds on every instance (or at the stated success rate) and the run
stays inside its time budget.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .diffops import Box, DiffProduct, OpFactor, apply_product, difmod_identity_check
from .exppoly import ExpPoly, ExpTerm, Witness, evaluate, monomials_upto
from .lattice import unit_shifts
from .montel import NoCandidate, certify_witness, minimal_orders, verify_annihilation
from .oracle import (
    FiniteGroupSpec,
    Profile,
    fixpoint_closure,
    frechet_nullspaces,
    random_exppoly,
    random_instance,
)
from .recover import RecoveryConfig, recover
from .scalar import GaussianRational
from .subspace import GradedLexBasis, SpanSpace, closure_chain, extend_once, operator_matrix

__all__ = ["CriterionResult", "CRITERIA", "run_criterion", "run_all"]


@dataclass
class CriterionResult:
    number: int
    name: str
    ok: bool
    detail: str
    seconds: float
    budget: float

    @property
    def passed(self) -> bool:
        return self.ok and self.seconds <= self.budget

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number} {self.name}: {self.detail} "
                f"({self.seconds:.2f}s, budget {self.budget:g}s)")

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "name": self.name,
            "passed": self.passed,
            "property_holds": self.ok,
            "detail": self.detail,
            "seconds": round(self.seconds, 3),
            "budget": self.budget,
        }


# ---------------------------------------------------------------------------
# instance helpers


def _random_shift(rng, dim: int, span: int = 2) -> tuple:
    while True:
        h = tuple(int(v) for v in rng.integers(-span, span + 1, size=dim))
        if any(h):
            return h


def _random_rational(rng, real_only: bool = False) -> GaussianRational:
    den = int(rng.integers(1, 4))
    re = Fraction(int(rng.integers(-4 * den, 4 * den + 1)), den)
    im = Fraction(0) if real_only else Fraction(int(rng.integers(-2 * den, 2 * den + 1)), den)
    return GaussianRational(re, im)


def _random_exact_witness(rng, dim: int) -> Witness:
    comps = []
    for _ in range(dim):
        z = _random_rational(rng, real_only=rng.random() < 0.5)
        while not z:
            z = _random_rational(rng)
        comps.append(z)
    return Witness(tuple(comps))


def _block(w: Witness, degree: int) -> list[ExpPoly]:
    return [ExpPoly.monomial(w, a, 1) for a in monomials_upto(w.dim, degree)]


def _seed_space(rng, dim: int):
    """``V`` = some ``mu``-monomials plus a full block ``E_nu``; returns (V, mu, top degree)."""
    mu = _random_exact_witness(rng, dim)
    nu = _random_exact_witness(rng, dim)
    while nu.lam == mu.lam:
        nu = _random_exact_witness(rng, dim)
    monos = monomials_upto(dim, 2)
    picked = [a for a in monos if rng.random() < 0.4] or [monos[int(rng.integers(len(monos)))]]
    gens = [ExpPoly.monomial(mu, a, 1) for a in picked]
    gens += _block(nu, int(rng.integers(0, 2)))
    return SpanSpace.span(dim, gens), mu, max(sum(a) for a in picked)


# ---------------------------------------------------------------------------
# criteria


def criterion_1(seed: int = 0):
    bad = 0
    for i in range(200):
        rng = np.random.default_rng(seed + 10_000 + i)
        dim = 1 + i % 3
        f = random_exppoly(rng, Profile(dim=dim, terms=3, degree=3, backend="exact"))
        for _ in range(5):
            h = _random_shift(rng, dim)
            P = DiffProduct(tuple(OpFactor(t.witness, h, t.degree + 1) for t in f.terms))
            if apply_product(f, P).terms:
                bad += 1
    return bad == 0, f"{200 * 5 - bad}/1000 products annihilate exactly"


def criterion_2(seed: int = 0):
    bad_exact = bad_float = 0
    for i in range(100):
        rng = np.random.default_rng(seed + 20_000 + i)
        dim = 1 + i % 2
        f = random_exppoly(rng, Profile(dim=dim, terms=2, degree=2, backend="exact"))
        phi = _random_exact_witness(rng, dim)
        shifts = [_random_shift(rng, dim) for _ in range(int(rng.integers(1, 4)))]
        box = Box((0,) * dim, (2,) * dim)
        if not difmod_identity_check(f, phi, shifts, box):
            bad_exact += 1
        g = random_exppoly(rng, Profile(dim=dim, terms=2, degree=2, backend="float"))
        psi = random_exppoly(rng, Profile(dim=dim, terms=1, degree=0, backend="float")).terms[0].witness
        if not difmod_identity_check(g, psi, shifts, box, rtol=1e-10):
            bad_float += 1
    return bad_exact == bad_float == 0, f"exact {100 - bad_exact}/100, float {100 - bad_float}/100"


def criterion_3(seed: int = 0):
    rng = np.random.default_rng(seed + 30_000)
    cases = bad = 0
    for dim in (1, 2):
        for k in range(4):
            w = _random_exact_witness(rng, dim)
            Ej = GradedLexBasis(w, k)
            for _ in range(10):
                h = _random_shift(rng, dim)
                phi = _random_rational(rng)
                M = operator_matrix(Ej, phi, h)
                target = w(h) - phi
                cases += 1
                if not M.strict_lower_is_zero() or any(v != target for v in M.diagonal()):
                    bad += 1
                N = operator_matrix(Ej, w(h), h)
                if not N.power(k + 1).is_zero():
                    bad += 1
    return bad == 0, f"{cases} matrices, {bad} structural failures"


def criterion_4(seed: int = 0):
    bad_ext = 0
    for i in range(50):
        rng = np.random.default_rng(seed + 40_000 + i)
        dim = 1 + i % 2
        V, mu, top = _seed_space(rng, dim)
        L = OpFactor(mu, _random_shift(rng, dim), 1)
        n = top + 1 + int(rng.integers(0, 2))
        W = extend_once(V, L, n)
        if not W.same_as(fixpoint_closure(V, [L])):
            bad_ext += 1
    bad_chain = 0
    for i in range(20):
        rng = np.random.default_rng(seed + 41_000 + i)
        dim = 1 + i % 2
        V, mu, top = _seed_space(rng, dim)
        t = int(rng.integers(1, 4))
        ops = [OpFactor(mu, _random_shift(rng, dim), 1) for _ in range(t)]
        powers = [top + 1] * t
        res = closure_chain(V, ops, powers)
        ok = res.precondition_met and all(res.invariant) and res.space.contains_space(V)
        for perm in itertools.permutations(range(t)):
            other = closure_chain(V, [ops[j] for j in perm], [powers[j] for j in perm])
            ok = ok and other.space.same_as(res.space)
        bad_chain += not ok
    return bad_ext == bad_chain == 0, f"extend_once {50 - bad_ext}/50, closure_chain {20 - bad_chain}/20"


def _small_groups(limit: int = 64):
    groups = [(m,) for m in range(1, limit + 1)]
    groups += [(a, b) for a in range(2, limit + 1) for b in range(a, limit // a + 1)]
    return groups


def criterion_5(seed: int = 0):
    groups = _small_groups()
    unequal = []
    for moduli in groups:
        G = FiniteGroupSpec(moduli)
        for n in (0, 1, 2):
            if not frechet_nullspaces(G, n, seed=seed).equal:
                unequal.append((moduli, n))
    total = 3 * len(groups)
    return not unequal, f"{total - len(unequal)}/{total} (group, n) pairs equal"


def _witness_error(truth: list[Witness], got: list[Witness]) -> float:
    if len(truth) != len(got):
        return float("inf")
    return max(
        (min(max(abs(complex(a) - complex(b)) for a, b in zip(u.lam, v.lam)) for v in got) for u in truth),
        default=0.0,
    )


def criterion_6(seed: int = 0):
    ok_count = interp_bad = 0
    for i in range(100):
        s = seed + i
        dim = 1 + s % 2
        inst = random_instance(s, Profile(dim=dim, terms=3, degree=2, separation=0.1))
        cfg = RecoveryConfig(max_order=inst.order)
        dec = recover(inst.samples, cfg)
        got = dec.result
        vals = inst.samples.values
        fit = np.array([complex(evaluate(got, p)) for p in inst.samples.box.points()]).reshape(vals.shape)
        value_err = float(np.abs(fit - vals.astype(complex)).max()) / max(1.0, inst.samples.max_abs())
        werr = _witness_error(inst.f.witnesses, got.witnesses)
        if value_err <= 1e-8 and werr <= 1e-6:
            ok_count += 1
        else:
            continue
        shifts = unit_shifts(dim)
        try:
            cand = certify_witness(inst.samples, shifts, inst.order, cfg)
        except NoCandidate:
            interp_bad += 1
            continue
        for w in got.witnesses:
            for k, h in enumerate(shifts):
                target = complex(w(h))
                if min((abs(complex(v) - target) for v, _ in cand.roots[k]), default=np.inf) > 1e-6:
                    interp_bad += 1
                    break
            else:
                continue
            break
        if len(got.witnesses) == 1:
            w = got.witnesses[0]
            if not any(all(abs(complex(a) - complex(w(h))) <= 1e-6 for a, h in zip(c, shifts))
                       for c in cand.assignments):
                interp_bad += 1
    return ok_count >= 95 and interp_bad == 0, (
        f"round trip {ok_count}/100 (need 95), interpolation mismatches {interp_bad}"
    )


def criterion_7(seed: int = 0):
    got = []
    for i in range(5):
        w = Witness((GaussianRational(2**i),))
        f = ExpPoly(1, (ExpTerm(w, {(i,): GaussianRational(1)}),))
        got.append(minimal_orders(f, [(1,)], [GaussianRational(2**i)], max_power=8)[0])
    want = [i + 1 for i in range(5)]
    return got == want, f"orders {got}, expected {want}"


def criterion_8(seed: int = 0):
    bad = no_cand = 0
    for i in range(50):
        s = seed + 80_000 + i
        dim = 1 + i % 2
        inst = random_instance(s, Profile(dim=dim, terms=2, min_terms=2, degree=1, separation=0.1))
        shifts = unit_shifts(dim)
        try:
            cand = certify_witness(inst.samples, shifts, 4, RecoveryConfig(max_order=4))
        except NoCandidate:
            no_cand += 1
            continue
        if cand.all or cand.assignments or not cand.generates:
            bad += 1
            continue
        for w in inst.f.witnesses:
            if verify_annihilation(inst.samples, shifts, [4] * dim, w).annihilated:
                bad += 1
                break
    return bad == 0, f"{50 - bad}/50 rejected ({no_cand} without candidates)"


CRITERIA = {
    1: ("symbolic annihilation", criterion_1, 5.0),
    2: ("modified-difference identity", criterion_2, 2.0),
    3: ("upper-triangular operator matrices", criterion_3, 2.0),
    4: ("closure constructions", criterion_4, 10.0),
    5: ("Frechet equivalence", criterion_5, 30.0),
    6: ("round-trip recovery", criterion_6, 60.0),
    7: ("per-subgroup orders", criterion_7, 1.0),
    8: ("negative control", criterion_8, 10.0),
}


def run_criterion(number: int, seed: int = 0) -> CriterionResult:
    name, fn, budget = CRITERIA[number]
    t0 = time.perf_counter()
    ok, detail = fn(seed)
    return CriterionResult(number, name, bool(ok), detail, time.perf_counter() - t0, budget)


def run_all(only=None, seed: int = 0, echo=None) -> list[CriterionResult]:
    out = []
    for k in sorted(only or CRITERIA):
        if k not in CRITERIA:
            raise ValueError(f"unknown criterion {k}")
        r = run_criterion(k, seed)
        if echo is not None:
            echo(r.line())
        out.append(r)
    return out
