"""Symbolic exponential polynomials on the integer lattice.

An :class:`ExpPoly` in ``d`` variables is a finite sum of terms
``p(n) * lam**n`` where ``lam`` is a point of ``(C \\ {0})**d``,
``lam**n = lam_1**n_1 * ... * lam_d**n_d`` and ``p`` is an ordinary polynomial
stored sparsely as ``{multi_index: coefficient}``.

All values are immutable; every operation returns a new object.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping, Sequence

from .scalar import (
    EXACT,
    FLOAT,
    GaussianRational,
    close,
    cpow,
    exact,
    is_exact,
    is_zero,
    scalar_from_json,
    scalar_to_json,
)

__all__ = [
    "Witness",
    "ExpTerm",
    "ExpPoly",
    "DimensionMismatch",
    "grlex_key",
    "monomials_upto",
    "evaluate",
    "normalize",
    "translate",
    "linear_combine",
    "multiply_exponential",
]

DEFAULT_MERGE_TOL = 1e-9


class DimensionMismatch(ValueError):
    pass


def grlex_key(alpha: Sequence[int]):
    """Graded lex key: total degree first, then lex with coordinate 1 first."""
    return (sum(alpha), tuple(alpha))


def monomials_upto(dim: int, degree: int) -> list[tuple[int, ...]]:
    """All multi-indices with ``|alpha| <= degree`` in graded lex order."""
    out: list[tuple[int, ...]] = []

    def rec(prefix, remaining, slots):
        if slots == 0:
            out.append(tuple(prefix))
            return
        for a in range(remaining + 1):
            prefix.append(a)
            rec(prefix, remaining - a, slots - 1)
            prefix.pop()

    rec([], degree, dim)
    out.sort(key=grlex_key)
    return out


def _point(n, dim: int) -> tuple[int, ...]:
    n = tuple(int(v) for v in n)
    if len(n) != dim:
        raise DimensionMismatch(f"expected a point of dimension {dim}, got {len(n)}")
    return n


@dataclass(frozen=True)
class Witness:
    """An exponential ``n -> lam**n`` on ``Z**d`` (all components nonzero)."""

    lam: tuple

    def __post_init__(self):
        lam = tuple(self.lam)
        if not lam:
            raise ValueError("witness needs dimension >= 1")
        conv = []
        for c in lam:
            if isinstance(c, (GaussianRational, int, Fraction, str)) or (
                isinstance(c, (tuple, list)) and len(c) == 2
            ):
                c = exact(c)
            else:
                c = complex(c)
            if is_zero(c):
                raise ValueError("witness components must be nonzero")
            conv.append(c)
        if any(not is_exact(c) for c in conv):
            conv = [complex(c) for c in conv]
        object.__setattr__(self, "lam", tuple(conv))

    @property
    def dim(self) -> int:
        return len(self.lam)

    @property
    def exact(self) -> bool:
        return is_exact(self.lam[0])

    def __call__(self, n) -> object:
        n = _point(n, self.dim)
        val = GaussianRational(1) if self.exact else 1 + 0j
        for c, k in zip(self.lam, n):
            if k:
                val = val * cpow(c, k)
        return val

    def inverse(self) -> "Witness":
        return Witness(tuple(1 / c for c in self.lam))

    def times(self, other: "Witness") -> "Witness":
        if other.dim != self.dim:
            raise DimensionMismatch("witness dimensions differ")
        return Witness(tuple(a * b for a, b in zip(self.lam, other.lam)))

    def to_float(self) -> "Witness":
        return Witness(tuple(complex(c) for c in self.lam))

    def sort_key(self):
        if self.exact:
            return tuple((c.real, c.imag) for c in self.lam)
        return tuple((c.real, c.imag) for c in self.lam)

    def close_to(self, other: "Witness", tol: float) -> bool:
        return all(close(a, b, tol) for a, b in zip(self.lam, other.lam))

    def to_json(self):
        return [scalar_to_json(c) for c in self.lam]

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "Witness":
        return cls(tuple(scalar_from_json(c, backend) for c in data))

    def __repr__(self):
        return "Witness(" + ", ".join(str(c) for c in self.lam) + ")"


def _scalar_one(exact_backend: bool):
    return GaussianRational(1) if exact_backend else 1 + 0j


@dataclass(frozen=True)
class ExpTerm:
    """``sum_alpha c_alpha n**alpha`` times the exponential ``witness``."""

    witness: Witness
    coeffs: Mapping[tuple, object] = field(default_factory=dict)

    def __post_init__(self):
        d = self.witness.dim
        clean = {}
        for alpha, c in dict(self.coeffs).items():
            alpha = tuple(int(a) for a in alpha)
            if len(alpha) != d or any(a < 0 for a in alpha):
                raise ValueError(f"bad multi-index {alpha} for dimension {d}")
            if not (isinstance(c, (GaussianRational, complex, float))):
                c = exact(c)
            clean[alpha] = c
        object.__setattr__(self, "coeffs", clean)

    @property
    def degree(self) -> int:
        return max((sum(a) for a in self.coeffs), default=-1)

    def monomials(self) -> list[tuple[int, ...]]:
        return sorted(self.coeffs, key=grlex_key)

    def poly_value(self, n: tuple[int, ...]):
        total = 0
        for alpha, c in self.coeffs.items():
            m = 1
            for k, a in zip(n, alpha):
                if a:
                    m *= k**a
            total = total + c * m
        return total


@dataclass(frozen=True)
class ExpPoly:
    """A finite sum of :class:`ExpTerm` on ``Z**dim``; empty means zero."""

    dim: int
    terms: tuple = ()

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be >= 1")
        terms = tuple(self.terms)
        for t in terms:
            if t.witness.dim != self.dim:
                raise DimensionMismatch("term witness dimension differs from dim")
        object.__setattr__(self, "terms", terms)

    # constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, dim: int) -> "ExpPoly":
        return cls(dim, ())

    @classmethod
    def monomial(cls, lam, alpha=None, c=1) -> "ExpPoly":
        """``c * n**alpha * lam**n``; ``alpha`` defaults to the zero index."""
        w = lam if isinstance(lam, Witness) else Witness(tuple(lam))
        alpha = tuple(alpha) if alpha is not None else (0,) * w.dim
        return cls(w.dim, (ExpTerm(w, {alpha: c}),))

    @classmethod
    def from_terms(cls, dim: int, items: Iterable) -> "ExpPoly":
        """Build from ``[(lam, {alpha: c, ...}), ...]`` and normalize."""
        terms = []
        for lam, coeffs in items:
            w = lam if isinstance(lam, Witness) else Witness(tuple(lam))
            terms.append(ExpTerm(w, coeffs))
        return normalize(cls(dim, tuple(terms)))

    # properties -----------------------------------------------------------
    @property
    def backend(self) -> str:
        for t in self.terms:
            if not t.witness.exact:
                return FLOAT
            for c in t.coeffs.values():
                if not is_exact(c):
                    return FLOAT
        return EXACT

    @property
    def witnesses(self) -> list[Witness]:
        return [t.witness for t in self.terms]

    def is_zero(self, tol: float = 0.0) -> bool:
        return all(is_zero(c, tol) for t in self.terms for c in t.coeffs.values())

    def max_coeff(self) -> float:
        return max((abs(complex(c)) for t in self.terms for c in t.coeffs.values()), default=0.0)

    def to_float(self) -> "ExpPoly":
        return ExpPoly(
            self.dim,
            tuple(
                ExpTerm(t.witness.to_float(), {a: complex(c) for a, c in t.coeffs.items()})
                for t in self.terms
            ),
        )

    # arithmetic sugar -------------------------------------------------------
    def __call__(self, n):
        return evaluate(self, n)

    def __add__(self, other):
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return linear_combine([(1, self), (1, other)])

    def __sub__(self, other):
        if not isinstance(other, ExpPoly):
            return NotImplemented
        return linear_combine([(1, self), (-1, other)])

    def __neg__(self):
        return linear_combine([(-1, self)])

    def __mul__(self, c):
        if isinstance(c, ExpPoly):
            return NotImplemented
        return linear_combine([(c, self)])

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, ExpPoly):
            return NotImplemented
        a, b = normalize(self), normalize(other)
        if a.dim != b.dim or len(a.terms) != len(b.terms):
            return False
        return all(
            s.witness.lam == t.witness.lam and s.coeffs == t.coeffs for s, t in zip(a.terms, b.terms)
        )

    def __hash__(self):
        return hash((self.dim, len(self.terms)))

    def __repr__(self):
        if not self.terms:
            return f"ExpPoly(dim={self.dim}, 0)"
        parts = []
        for t in self.terms:
            poly = " + ".join(f"{c}*n^{list(a)}" for a, c in sorted(t.coeffs.items(), key=lambda kv: grlex_key(kv[0])))
            parts.append(f"({poly})*{t.witness!r}^n")
        return f"ExpPoly(dim={self.dim}, " + " + ".join(parts) + ")"

    # serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        f = normalize(self)
        return {
            "dim": f.dim,
            "terms": [
                {
                    "lambda": t.witness.to_json(),
                    "coeffs": [{"alpha": list(a), "c": scalar_to_json(t.coeffs[a])} for a in t.monomials()],
                }
                for t in f.terms
            ],
        }

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "ExpPoly":
        if isinstance(data, str):
            data = json.loads(data)
        dim = int(data["dim"])
        terms = []
        for t in data.get("terms", []):
            w = Witness.from_json(t["lambda"], backend)
            if w.dim != dim:
                raise DimensionMismatch("witness dimension differs from dim")
            coeffs = {}
            for entry in t["coeffs"]:
                alpha = tuple(int(a) for a in entry["alpha"])
                c = scalar_from_json(entry["c"], backend)
                coeffs[alpha] = coeffs.get(alpha, 0) + c
            terms.append(ExpTerm(w, coeffs))
        return normalize(cls(dim, tuple(terms)))


# ---------------------------------------------------------------------------
# operations


def evaluate(f: ExpPoly, n):
    """Value of ``f`` at the lattice point ``n`` (negative coordinates allowed)."""
    n = _point(n, f.dim)
    exact_backend = f.backend == EXACT
    total = GaussianRational(0) if exact_backend else 0j
    for t in f.terms:
        total = total + t.witness(n) * t.poly_value(n)
    if not exact_backend:
        total = complex(total)
        if total != total or abs(total) == float("inf"):
            from .scalar import EvaluationOverflow

            raise EvaluationOverflow(f"value at {n} overflows")
    return total


def _merge_into(target: dict, coeffs: Mapping, scale=1):
    for alpha, c in coeffs.items():
        v = c * scale if scale != 1 else c
        if alpha in target:
            target[alpha] = target[alpha] + v
        else:
            target[alpha] = v


def normalize(f: ExpPoly, merge_tol: float = DEFAULT_MERGE_TOL, zero_tol: float = 0.0) -> ExpPoly:
    """Canonical form: one term per witness, no zero coefficients, sorted terms.

    Exact witnesses merge on equality; float witnesses merge when every
    component agrees within ``merge_tol`` (relative to ``max(1, |lam|)``).
    """
    floaty = f.backend == FLOAT
    groups: list[list] = []  # [witness, coeff dict]
    index: dict = {}
    for t in f.terms:
        w = t.witness.to_float() if floaty else t.witness
        coeffs = {a: complex(c) for a, c in t.coeffs.items()} if floaty else t.coeffs
        if not floaty:
            slot = index.get(w.lam)
            if slot is None:
                index[w.lam] = len(groups)
                groups.append([w, dict(coeffs)])
            else:
                _merge_into(groups[slot][1], coeffs)
            continue
        for g in groups:
            if g[0].close_to(w, merge_tol):
                _merge_into(g[1], coeffs)
                break
        else:
            groups.append([w, dict(coeffs)])
    terms = []
    for w, coeffs in groups:
        kept = {a: c for a, c in coeffs.items() if not is_zero(c, zero_tol)}
        if kept:
            terms.append(ExpTerm(w, kept))
    terms.sort(key=lambda t: t.witness.sort_key())
    return ExpPoly(f.dim, tuple(terms))


def shift_polynomial(coeffs: Mapping, y: Sequence[int]) -> dict:
    """Coefficients of ``p(n + y)`` given those of ``p(n)``."""
    cur = dict(coeffs)
    for i, yi in enumerate(y):
        if yi == 0:
            continue
        nxt: dict = {}
        for alpha, c in cur.items():
            a = alpha[i]
            for j in range(a + 1):
                factor = comb(a, j) * yi ** (a - j)
                beta = alpha[:i] + (j,) + alpha[i + 1 :]
                v = c * factor
                nxt[beta] = nxt[beta] + v if beta in nxt else v
        cur = nxt
    return cur


def translate(f: ExpPoly, y) -> ExpPoly:
    """The translate ``x -> f(x + y)``; witnesses are unchanged."""
    y = _point(y, f.dim)
    if not any(y):
        return normalize(f)
    terms = []
    for t in f.terms:
        ey = t.witness(y)
        shifted = shift_polynomial(t.coeffs, y)
        terms.append(ExpTerm(t.witness, {a: ey * c for a, c in shifted.items()}))
    return normalize(ExpPoly(f.dim, tuple(terms)))


def linear_combine(pairs: Iterable) -> ExpPoly:
    """Normalized ``sum c_i f_i`` over ``[(c_i, f_i), ...]``."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("linear_combine needs at least one pair")
    dim = pairs[0][1].dim
    terms = []
    for c, f in pairs:
        if f.dim != dim:
            raise DimensionMismatch("linear_combine over different dimensions")
        if not is_exact(c):
            c = complex(c)
        elif not isinstance(c, GaussianRational):
            c = exact(c)
        for t in f.terms:
            terms.append(ExpTerm(t.witness, {a: c * v for a, v in t.coeffs.items()}))
    return normalize(ExpPoly(dim, tuple(terms)))


def multiply_exponential(f: ExpPoly, w: Witness) -> ExpPoly:
    """Pointwise product ``f(n) * w(n)``."""
    if w.dim != f.dim:
        raise DimensionMismatch("witness dimension differs")
    return normalize(ExpPoly(f.dim, tuple(ExpTerm(t.witness.times(w), t.coeffs) for t in f.terms)))
