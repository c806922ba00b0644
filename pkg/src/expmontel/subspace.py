"""Finite-dimensional spaces of exponential polynomials.

Coordinates are taken on the functions ``n**alpha * lam**n`` for distinct
pairs ``(lam, alpha)``; these are linearly independent, so ranks and
membership reduce to exact sparse row reduction.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .diffops import OpFactor, apply_phi_value, phi_at
from .exppoly import ExpPoly, ExpTerm, Witness, grlex_key, monomials_upto, normalize
from .lattice import generates_lattice
from .linalg import Echelon, matmul
from .scalar import EXACT, GaussianRational, exact, scalar_to_json

__all__ = [
    "SpanSpace",
    "GradedLexBasis",
    "OperatorMatrix",
    "ClosureResult",
    "apply_op",
    "extend_once",
    "closure_chain",
    "is_translation_invariant",
    "invariance_flags",
    "is_invariant",
    "operator_matrix",
]


def _coords(f: ExpPoly) -> dict:
    if f.backend != EXACT:
        raise TypeError("SpanSpace only holds exact-backend ExpPolys")
    return {(t.witness.lam, a): c for t in f.terms for a, c in t.coeffs.items()}


def _col_order(key):
    lam, alpha = key
    return (tuple((c.real, c.imag) for c in lam), grlex_key(alpha))


class SpanSpace:
    """Span of linearly independent exact ExpPolys on ``Z**dim_ambient``."""

    def __init__(self, dim_ambient: int, basis: Sequence[ExpPoly] = ()):
        self.dim_ambient = dim_ambient
        self._ech = Echelon(_col_order)
        kept = []
        for b in basis:
            if b.dim != dim_ambient:
                raise ValueError("basis element dimension differs")
            if not self._ech.add(_coords(b)):
                raise ValueError("basis elements are linearly dependent")
            kept.append(normalize(b))
        self.basis: tuple[ExpPoly, ...] = tuple(kept)

    @classmethod
    def span(cls, dim_ambient: int, gens: Iterable[ExpPoly]) -> "SpanSpace":
        """Span of arbitrary generators; dependent ones are skipped."""
        space = cls(dim_ambient)
        return space.with_vectors(gens)

    def with_vectors(self, gens: Iterable[ExpPoly]) -> "SpanSpace":
        new = SpanSpace(self.dim_ambient)
        new._ech = self._ech.copy()
        kept = list(self.basis)
        for g in gens:
            if g.dim != self.dim_ambient:
                raise ValueError("generator dimension differs")
            if new._ech.add(_coords(g)):
                kept.append(normalize(g))
        new.basis = tuple(kept)
        return new

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, f: ExpPoly) -> bool:
        return self._ech.contains(_coords(f))

    def contains_space(self, other: "SpanSpace") -> bool:
        return all(self.contains(b) for b in other.basis)

    def same_as(self, other: "SpanSpace") -> bool:
        return self.dim == other.dim and self.contains_space(other)

    def witnesses(self) -> set:
        return {t.witness.lam for b in self.basis for t in b.terms}

    def to_json(self) -> dict:
        return {"dim": self.dim_ambient, "basis": [b.to_json() for b in self.basis]}

    @classmethod
    def from_json(cls, data) -> "SpanSpace":
        if isinstance(data, str):
            data = json.loads(data)
        basis = [ExpPoly.from_json(b, EXACT) for b in data["basis"]]
        dim = int(data.get("dim", basis[0].dim if basis else 1))
        return cls.span(dim, basis)

    def __repr__(self):
        return f"SpanSpace(dim_ambient={self.dim_ambient}, dim={self.dim})"


def apply_op(f: ExpPoly, op: OpFactor) -> ExpPoly:
    return apply_phi_value(f, op.phi_value, op.shift, op.power)


def is_invariant(V: SpanSpace, op: OpFactor, times: int = 1) -> bool:
    """``op**times (V) <= V``."""
    for b in V.basis:
        g = b
        for _ in range(times):
            g = apply_op(g, op)
        if not V.contains(g):
            return False
    return True


def extend_once(V: SpanSpace, L: OpFactor, n: int) -> SpanSpace:
    """``V + L(V) + ... + L**n(V)``.

    When ``V`` is ``L**n``-invariant and ``n >= 1`` the result is the smallest
    ``L``-invariant space containing ``V``; that invariance is asserted.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return V
    gens = []
    cur = list(V.basis)
    for _ in range(n):
        cur = [apply_op(v, L) for v in cur]
        gens.extend(cur)
    W = V.with_vectors(gens)
    if is_invariant(V, L, n):
        assert is_invariant(W, L), "extension of an L^n-invariant space is not L-invariant"
    return W


@dataclass
class ClosureResult:
    space: SpanSpace
    precondition_met: bool
    invariant: list = field(default_factory=list)

    @property
    def flags(self) -> list[str]:
        return [] if self.precondition_met else ["lemma-precondition-unmet"]

    def to_json(self) -> dict:
        return {
            **self.space.to_json(),
            "dimension": self.space.dim,
            "precondition_met": self.precondition_met,
            "invariant": list(self.invariant),
            "flags": self.flags,
        }


def closure_chain(V: SpanSpace, ops: Sequence[OpFactor], powers: Sequence[int]) -> ClosureResult:
    """``V_0 = V``, ``V_i = (V_{i-1})_{L_i}^{[s_i]}``; returns ``V_t`` with checks.

    ``precondition_met`` records whether ``V`` was ``L_i**s_i``-invariant for
    every ``i`` with ``s_i >= 1``; ``invariant[i]`` whether ``V_t`` is
    ``L_i``-invariant.
    """
    if len(ops) != len(powers):
        raise ValueError("ops and powers differ in length")
    pre = all(s >= 1 and is_invariant(V, op, s) for op, s in zip(ops, powers))
    W = V
    for op, s in zip(ops, powers):
        W = extend_once(W, op, s)
    inv = [is_invariant(W, op) for op in ops]
    if pre:
        assert all(inv), "closure chain under the invariance hypothesis is not invariant"
    return ClosureResult(W, pre, inv)


def is_translation_invariant(V: SpanSpace, generators: Sequence) -> bool:
    """``tau_g(V) <= V`` for every generator ``g``."""
    for g in generators:
        for b in V.basis:
            # tau_g b = Delta_{0;g} b
            if not V.contains(apply_phi_value(b, 0, g, 1)):
                return False
    return True


def invariance_flags(V: SpanSpace, generators: Sequence, phi=None) -> dict:
    """Translation, difference and modified-difference invariance side by side.

    ``phi`` may be a witness, a table or a scalar; the default uses a fixed
    non-trivial value so the modified check is not a plain difference.
    """
    gens = [tuple(g) for g in generators]
    diff = all(V.contains(apply_phi_value(b, 1, g, 1)) for g in gens for b in V.basis)
    if phi is None:
        phi = exact((7, 3))
    mod = all(
        V.contains(apply_phi_value(b, phi_at(phi, g), g, 1)) for g in gens for b in V.basis
    )
    return {
        "translation": is_translation_invariant(V, gens),
        "difference": diff,
        "modified": mod,
        "generates": generates_lattice(gens, V.dim_ambient) if gens else False,
    }


# ---------------------------------------------------------------------------
# operator matrices on E_j = span{n**alpha e_j : |alpha| <= k_j}


@dataclass(frozen=True)
class GradedLexBasis:
    witness: Witness
    degree_bound: int

    @property
    def monomials(self) -> list[tuple[int, ...]]:
        return monomials_upto(self.witness.dim, self.degree_bound)

    @property
    def size(self) -> int:
        return len(self.monomials)

    def element(self, i: int) -> ExpPoly:
        return ExpPoly.monomial(self.witness, self.monomials[i], 1)

    def coordinates(self, f: ExpPoly) -> list:
        index = {a: i for i, a in enumerate(self.monomials)}
        out = [GaussianRational(0) if self.witness.exact else 0j] * len(index)
        for t in f.terms:
            if t.witness.lam != self.witness.lam:
                raise ValueError("function leaves E_j")
            for a, c in t.coeffs.items():
                out[index[a]] = c
        return out

    def to_json(self) -> dict:
        return {
            "lambda": self.witness.to_json(),
            "degree_bound": self.degree_bound,
            "order": "grlex, lex ties compare coordinate 1 first",
            "monomials": [list(a) for a in self.monomials],
        }


@dataclass(frozen=True)
class OperatorMatrix:
    """Column ``j`` holds the coordinates of the operator applied to basis element ``j``."""

    entries: tuple

    @property
    def size(self) -> int:
        return len(self.entries)

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        return OperatorMatrix(tuple(tuple(r) for r in matmul(self.entries, other.entries)))

    def power(self, k: int) -> "OperatorMatrix":
        n = self.size
        one, zero = GaussianRational(1), GaussianRational(0)
        out = OperatorMatrix(tuple(tuple(one if i == j else zero for j in range(n)) for i in range(n)))
        for _ in range(k):
            out = out @ self
        return out

    def diagonal(self) -> list:
        return [self.entries[i][i] for i in range(self.size)]

    def strict_lower_is_zero(self) -> bool:
        return all(not self.entries[i][j] for i in range(self.size) for j in range(i))

    def is_zero(self) -> bool:
        return all(not v for row in self.entries for v in row)

    def determinant(self):
        """Product of the diagonal; valid because the matrix is triangular."""
        if not self.strict_lower_is_zero():
            raise ValueError("determinant shortcut needs a triangular matrix")
        det = GaussianRational(1)
        for v in self.diagonal():
            det = det * v
        return det

    def to_json(self) -> dict:
        return {"size": self.size, "entries": [[scalar_to_json(v) for v in row] for row in self.entries]}


def operator_matrix(Ej: GradedLexBasis, phi_value, h) -> OperatorMatrix:
    """Matrix of ``Delta_{phi;h}`` on ``E_j`` in the graded lex basis."""
    h = tuple(int(v) for v in h)
    n = Ej.size
    cols = []
    for i in range(n):
        img = apply_phi_value(Ej.element(i), phi_value, h, 1)
        cols.append(Ej.coordinates(img))
    return OperatorMatrix(tuple(tuple(cols[j][i] for j in range(n)) for i in range(n)))
