"""Annihilation certificates for modified difference operators.

A certificate records shifts ``h_k``, explicit operator powers and the
values ``phi(h_k)``, together with whether ``Delta_{phi;h_k}**power f``
vanishes for every ``k`` and whether the shifts generate ``Z**d`` (otherwise
any conclusion only concerns the generated subgroup).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .diffops import (
    InsufficientBox,
    OpFactor,
    PhiTable,
    SampledFunction,
    apply_phi_value,
    apply_sampled,
    phi_at,
)
from .exppoly import DimensionMismatch, ExpPoly, Witness, evaluate
from .lattice import generates_lattice, invariant_factors
from .scalar import EXACT, is_exact, scalar_to_json

__all__ = [
    "Tolerance",
    "MontelCertificate",
    "SystemCertificate",
    "WitnessCandidates",
    "NoCandidate",
    "verify_annihilation",
    "minimal_orders",
    "certify_witness",
    "build_system",
    "check_minimal_set",
    "MinimalityReport",
]

ANNIHILATED = "annihilated"
VIOLATED = "violated"


@dataclass(frozen=True)
class Tolerance:
    """A float output counts as zero when ``max|out| <= atol + rtol * max|input|``."""

    atol: float = 1e-10
    rtol: float = 1e-9

    def bound(self, scale: float) -> float:
        return self.atol + self.rtol * scale


DEFAULT_TOL = Tolerance()


class NoCandidate(ValueError):
    """The section annihilator along some shift is too long for ``max_power``."""

    def __init__(self, msg, roots=None):
        super().__init__(msg)
        self.roots = roots


def _phi_values(phi_values, shifts):
    """Normalize ``phi_values`` to one scalar per shift."""
    if isinstance(phi_values, (Witness, PhiTable)):
        return [phi_values(h) for h in shifts]
    vals = list(phi_values)
    if len(vals) != len(shifts):
        raise ValueError("need one phi value per shift")
    return [phi_at(v, h) for v, h in zip(vals, shifts)]


def _scale(f) -> float:
    if isinstance(f, SampledFunction):
        return f.max_abs()
    return f.max_coeff()


def _nonzero_point(g: ExpPoly, f: ExpPoly, tol: Tolerance):
    """A lattice point where ``g`` does not vanish.

    A nonzero exponential polynomial in one variable cannot vanish on more
    consecutive integers than its number of coefficients, so a box of that
    side always contains one.
    """
    side = sum(t.degree + 1 for t in g.terms) + 1
    best, best_val = None, -1.0
    for x in itertools.product(range(side), repeat=g.dim):
        v = evaluate(g, x)
        if is_exact(v):
            if v:
                return x
            continue
        if abs(v) > best_val:
            best, best_val = x, abs(v)
    return best


@dataclass
class MontelCertificate:
    shifts: list
    orders: list
    phi_values: list
    verdict: str
    generates: bool
    invariant_factors: tuple
    witness_point: tuple | None = None
    shift_index: int | None = None
    residuals: list = field(default_factory=list)

    @property
    def annihilated(self) -> bool:
        return self.verdict == ANNIHILATED

    @property
    def scope(self) -> str:
        return "full" if self.generates else "subgroup-only"

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "shifts": [list(h) for h in self.shifts],
            "orders": list(self.orders),
            "phi_values": [scalar_to_json(v) for v in self.phi_values],
            "generates": self.generates,
            "scope": self.scope,
            "invariant_factors": list(self.invariant_factors),
            "witness_point": list(self.witness_point) if self.witness_point is not None else None,
            "shift_index": self.shift_index,
            "residuals": list(self.residuals),
        }


def _apply(f, value, h, power):
    if isinstance(f, SampledFunction):
        return apply_sampled(f, PhiTable({h: value}), h, power)
    return apply_phi_value(f, value, h, power)


def _vanishes(g, f, tol: Tolerance, scale: float):
    """(is_zero, residual, witness point) for an operator output ``g``."""
    if isinstance(g, SampledFunction):
        if g.exact:
            idx = next((i for i, v in np.ndenumerate(g.values) if v), None)
            if idx is None:
                return True, 0.0, None
            return False, float(abs(g.values[idx])), tuple(a + l for a, l in zip(idx, g.lo))
        mags = np.abs(g.values)
        res = float(mags.max()) if mags.size else 0.0
        if res <= tol.bound(scale):
            return True, res, None
        idx = np.unravel_index(int(np.argmax(mags)), mags.shape)
        return False, res, tuple(int(a) + l for a, l in zip(idx, g.lo))
    if g.backend == EXACT:
        if not g.terms:
            return True, 0.0, None
        return False, g.max_coeff(), _nonzero_point(g, f, tol)
    res = g.max_coeff()
    if res <= tol.bound(scale):
        return True, res, None
    return False, res, _nonzero_point(g, f, tol)


def verify_annihilation(f, shifts, orders, phi_values, tol: Tolerance = DEFAULT_TOL) -> MontelCertificate:
    """Check ``Delta_{phi;h_k}**orders_k f == 0`` for every shift ``h_k``.

    ``f`` is an ExpPoly (symbolic check) or SampledFunction (checked on every
    point where the operator is defined). ``phi_values`` is a witness, a
    table, or one value per shift. Orders are explicit powers.
    """
    shifts = [tuple(int(a) for a in h) for h in shifts]
    orders = [int(p) for p in orders]
    if len(orders) != len(shifts):
        raise ValueError("need one order per shift")
    if any(len(h) != f.dim for h in shifts):
        raise DimensionMismatch("shift dimension differs from f")
    vals = _phi_values(phi_values, shifts)
    factors = invariant_factors(shifts, f.dim)
    gen = generates_lattice(shifts, f.dim)
    scale = _scale(f)
    residuals = []
    for k, (h, p, c) in enumerate(zip(shifts, orders, vals)):
        g = _apply(f, c, h, p)
        ok, res, point = _vanishes(g, f, tol, scale)
        residuals.append(res)
        if not ok:
            return MontelCertificate(shifts, orders, vals, VIOLATED, gen, factors, point, k, residuals)
    return MontelCertificate(shifts, orders, vals, ANNIHILATED, gen, factors, None, None, residuals)


def minimal_orders(f, shifts, phi_values, max_power: int, tol: Tolerance = DEFAULT_TOL) -> list:
    """Per shift, the least ``p <= max_power`` with ``Delta_{phi;h}**p f == 0``, else None."""
    if max_power < 1:
        raise ValueError("max_power must be >= 1")
    shifts = [tuple(int(a) for a in h) for h in shifts]
    vals = _phi_values(phi_values, shifts)
    scale = _scale(f)
    out = []
    for h, c in zip(shifts, vals):
        g = f
        found = None
        for p in range(1, max_power + 1):
            g = _apply(g, c, h, 1)
            if _vanishes(g, f, tol, scale)[0]:
                found = p
                break
        out.append(found)
    return out


@dataclass
class WitnessCandidates:
    """Outcome of :func:`certify_witness`.

    ``roots[k]`` lists ``(value, multiplicity)`` for the section annihilator
    along shift ``k``; ``tried`` every cross-shift assignment of those values
    that was checked; ``assignments`` the ones that annihilate the samples.
    ``all`` marks zero samples, for which every value works.
    """

    shifts: list
    roots: list
    assignments: list
    tried: list
    all: bool = False
    generates: bool = True
    certificates: list = field(default_factory=list)

    def to_json(self) -> dict:
        if self.all:
            return {"candidates": "all", "shifts": [list(h) for h in self.shifts]}
        return {
            "candidates": [[scalar_to_json(v) for v in a] for a in self.assignments],
            "shifts": [list(h) for h in self.shifts],
            "roots": [[{"value": scalar_to_json(v), "multiplicity": m} for v, m in r] for r in self.roots],
            "tried": len(self.tried),
            "generates": self.generates,
        }


def certify_witness(s: SampledFunction, shifts, max_power: int, cfg=None,
                    tol: Tolerance = DEFAULT_TOL) -> WitnessCandidates:
    """Values ``phi(h_k)`` for which some power ``<= max_power`` annihilates ``s``.

    Each shift contributes the distinct roots of the minimal annihilating
    polynomial of the shift operator on the sampled sections; a single value
    ``c`` works along ``h_k`` only when that polynomial is ``(x - c)**m``.
    Every cross-shift combination of roots is checked with
    :func:`verify_annihilation` at power ``max_power``.
    """
    from .recover import NoAnnihilator, RecoveryConfig, annihilator_roots, section_annihilator

    if max_power < 1:
        raise ValueError("max_power must be >= 1")
    cfg = cfg or RecoveryConfig(max_order=max_power)
    shifts = [tuple(int(a) for a in h) for h in shifts]
    gen = generates_lattice(shifts, s.dim)
    if s.max_abs() == 0:
        return WitnessCandidates(shifts, [], [], [], all=True, generates=gen)
    roots = []
    for h in shifts:
        try:
            q = section_annihilator(s, h, cfg)
        except NoAnnihilator as exc:
            raise NoCandidate(f"annihilator along {h} has degree > max_power {max_power}", roots) from exc
        if len(q) - 1 > max_power:
            raise NoCandidate(
                f"annihilator along {h} has degree {len(q) - 1} > max_power {max_power}", roots
            )
        roots.append(annihilator_roots(q, s, h, cfg))
    tried, accepted, certs = [], [], []
    for combo in itertools.product(*[[v for v, _ in r] for r in roots]):
        cert = verify_annihilation(s, shifts, [max_power] * len(shifts), list(combo), tol)
        tried.append(combo)
        certs.append(cert)
        if cert.annihilated:
            accepted.append(combo)
    return WitnessCandidates(shifts, roots, accepted, tried, False, gen, certs)


# ---------------------------------------------------------------------------
# systems of factors (products of modified differences, one per factor)


@dataclass
class SystemCertificate:
    """Factors ``phi_k`` with per-shift powers ``orders[k][i]``.

    ``verdicts`` maps each choice ``(i_1, ..., i_r)`` of shift indices to
    whether ``prod_k Delta_{phi_k; g_{i_k}}**orders[k][i_k] f`` vanishes.
    """

    shifts: list
    functions: list
    orders: list
    verdicts: dict = field(default_factory=dict)

    @property
    def satisfied(self) -> bool:
        return all(self.verdicts.values())

    def factor_value(self, k: int, i: int):
        return phi_at(self.functions[k], self.shifts[i])

    def to_json(self) -> dict:
        return {
            "shifts": [list(h) for h in self.shifts],
            "functions": [
                [{"y": list(h), "value": scalar_to_json(self.factor_value(k, i))} for i, h in enumerate(self.shifts)]
                for k in range(len(self.functions))
            ],
            "orders": [list(r) for r in self.orders],
            "verdicts": [{"choice": list(c), "annihilated": v} for c, v in sorted(self.verdicts.items())],
            "satisfied": self.satisfied,
        }


def _apply_choice(f, system: SystemCertificate, choice: dict):
    g = f
    for k, i in sorted(choice.items()):
        g = _apply(g, system.factor_value(k, i), system.shifts[i], system.orders[k][i])
    return g


def build_system(f, functions, shifts, orders, tol: Tolerance = DEFAULT_TOL) -> SystemCertificate:
    """Evaluate every instance of the product equation for ``f``."""
    shifts = [tuple(int(a) for a in h) for h in shifts]
    r, t = len(functions), len(shifts)
    if len(orders) != r or any(len(row) != t for row in orders):
        raise ValueError("orders must be an r x t matrix")
    system = SystemCertificate(shifts, list(functions), [list(map(int, row)) for row in orders])
    scale = _scale(f)
    for choice in itertools.product(range(t), repeat=r):
        g = _apply_choice(f, system, dict(enumerate(choice)))
        system.verdicts[choice] = _vanishes(g, f, tol, scale)[0]
    return system


@dataclass
class MinimalityReport:
    satisfied: bool
    non_redundant: list
    minimal: bool
    note: str = "factor k counts as needed when some choice of shifts for the other factors leaves a nonzero function"

    def to_json(self) -> dict:
        return {
            "satisfied": self.satisfied,
            "non_redundant": list(self.non_redundant),
            "minimal": self.minimal,
            "note": self.note,
        }


def check_minimal_set(f, system: SystemCertificate, tol: Tolerance = DEFAULT_TOL) -> MinimalityReport:
    """Per-factor non-redundancy flags and the overall minimality verdict."""
    r, t = len(system.functions), len(system.shifts)
    scale = _scale(f)
    if r == 1:
        nonzero = not _vanishes(f, f, tol, scale)[0]
        return MinimalityReport(system.satisfied, [nonzero], system.satisfied and nonzero)
    flags = []
    for k in range(r):
        others = [j for j in range(r) if j != k]
        needed = False
        for choice in itertools.product(range(t), repeat=len(others)):
            g = _apply_choice(f, system, dict(zip(others, choice)))
            if not _vanishes(g, f, tol, scale)[0]:
                needed = True
                break
        flags.append(needed)
    return MinimalityReport(system.satisfied, flags, system.satisfied and all(flags))
