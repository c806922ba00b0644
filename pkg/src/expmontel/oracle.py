"""Brute-force reference computations.

Nothing here shares an algorithm with the main modules: operators are
applied by literal recursion on their definition, closures by iterating to
a fixpoint, and Frechet solution spaces by plain linear algebra over the
full (or seeded sampled) set of equations on a finite abelian group.
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels
from .diffops import (
    DiffProduct,
    InsufficientBox,
    SampledFunction,
    apply_phi_value,
    phi_at,
    sample,
)
from .exppoly import ExpPoly, ExpTerm, Witness, monomials_upto, normalize
from .linalg import nullspace
from .scalar import GaussianRational, is_exact
from .subspace import SpanSpace

__all__ = [
    "FiniteGroupSpec",
    "SizeBoundExceeded",
    "FrechetResult",
    "Profile",
    "Instance",
    "brute_apply",
    "frechet_nullspaces",
    "random_exppoly",
    "random_instance",
    "fixpoint_closure",
]

FULL_ENUMERATION_LIMIT = 2**20
SAMPLED_TUPLES = 2**16


class SizeBoundExceeded(ValueError):
    pass


@dataclass(frozen=True)
class FiniteGroupSpec:
    """``Z_{m_1} x ... x Z_{m_k}``; elements are listed in row-major order."""

    moduli: tuple
    bound: int = 4096

    def __post_init__(self):
        mods = tuple(int(m) for m in self.moduli)
        if not mods or any(m < 1 for m in mods):
            raise ValueError("moduli must be positive integers")
        object.__setattr__(self, "moduli", mods)
        if self.order > self.bound:
            raise SizeBoundExceeded(f"|G| = {self.order} exceeds bound {self.bound}")

    @classmethod
    def parse(cls, text: str, bound: int = 4096) -> "FiniteGroupSpec":
        return cls(tuple(int(t) for t in str(text).split(",") if t.strip()), bound)

    @property
    def order(self) -> int:
        return math.prod(self.moduli)

    def elements(self) -> list[tuple[int, ...]]:
        return list(itertools.product(*(range(m) for m in self.moduli)))

    def index(self, x) -> int:
        i = 0
        for v, m in zip(x, self.moduli):
            i = i * m + (int(v) % m)
        return i

    def add(self, x, y) -> tuple[int, ...]:
        return tuple((a + b) % m for a, b, m in zip(x, y, self.moduli))

    def addition_table(self) -> np.ndarray:
        """``table[i, j]`` is the index of ``elements[i] + elements[j]``."""
        mods = np.array(self.moduli, dtype=np.int64)
        els = np.array(self.elements(), dtype=np.int64).reshape(self.order, len(mods))
        sums = (els[:, None, :] + els[None, :, :]) % mods
        strides = np.cumprod(np.concatenate([mods[1:], [1]])[::-1])[::-1]
        return np.ascontiguousarray(sums @ strides)


# ---------------------------------------------------------------------------
# literal operator application


def _unrolled(P: DiffProduct):
    return [(f.phi, f.shift) for f in P.factors for _ in range(f.power)]


def _mul(c, v):
    if is_exact(c) and is_exact(v):
        return c * v
    return complex(c) * complex(v)


def brute_apply(s, P: DiffProduct, G: FiniteGroupSpec | None = None):
    """Apply ``P`` by recursion on ``Delta_{phi;y} g(x) = g(x+y) - phi(y) g(x)``.

    ``s`` is a :class:`SampledFunction` (the output lives on the box where
    every point reached stays inside the samples) or, with ``G`` given, a
    full table of values indexed like ``G.elements()``.
    """
    ops = _unrolled(P)

    if G is not None:
        table = list(s)
        if len(table) != G.order:
            raise ValueError("table length differs from |G|")
        els = G.elements()

        def val_g(x, k):
            if k == 0:
                return table[G.index(x)]
            phi, y = ops[k - 1]
            return val_g(G.add(x, y), k - 1) - _mul(phi_at(phi, y), val_g(x, k - 1))

        return [val_g(x, len(ops)) for x in els]

    box = s.box
    for _, y in ops:
        box = box.shrink(y, 1)
    if box.empty:
        raise InsufficientBox("operator leaves no points inside the sample box")

    def val(x, k):
        if k == 0:
            return s.at(x)
        phi, y = ops[k - 1]
        ahead = tuple(a + b for a, b in zip(x, y))
        return val(ahead, k - 1) - _mul(phi_at(phi, y), val(x, k - 1))

    pts = list(box.points())
    out = [val(x, len(ops)) for x in pts]
    if s.exact and all(is_exact(v) for v in out):
        arr = np.empty(len(out), dtype=object)
        arr[:] = out
    else:
        arr = np.array([complex(v) for v in out], dtype=np.complex128)
    return SampledFunction(s.dim, box.lo, box.hi, arr.reshape(box.shape))


# ---------------------------------------------------------------------------
# Frechet equations on a finite abelian group


@dataclass
class FrechetResult:
    moduli: tuple
    n: int
    dim1: int
    dim2: int
    equal: bool
    sampled: bool = False
    exact: bool = False
    tuples: int = 0

    def to_json(self) -> dict:
        return {
            "group": list(self.moduli),
            "n": self.n,
            "dim1": self.dim1,
            "dim2": self.dim2,
            "equal": self.equal,
            "sampled": self.sampled,
            "exact": self.exact,
            "tuples": self.tuples,
        }


def _frech1_tuples(G: int, n: int, seed: int):
    if G ** (n + 1) <= FULL_ENUMERATION_LIMIT:
        grids = np.indices((G,) * (n + 1)).reshape(n + 1, -1).T
        return np.ascontiguousarray(grids, dtype=np.int64), False
    rng = np.random.default_rng(seed)
    rand = rng.integers(0, G, size=(SAMPLED_TUPLES, n + 1), dtype=np.int64)
    diag = np.repeat(np.arange(G, dtype=np.int64)[:, None], n + 1, axis=1)
    return np.ascontiguousarray(np.vstack([diag, rand])), True


def _frech2_tuples(G: int, n: int):
    return np.ascontiguousarray(np.repeat(np.arange(G, dtype=np.int64)[:, None], n + 1, axis=1))


def _float_null(M: np.ndarray) -> np.ndarray:
    _, sv, vh = np.linalg.svd(M, full_matrices=True)
    thr = 1e-9 * (sv[0] if sv.size else 0.0)
    rank = int(np.sum(sv > thr))
    return vh[rank:].conj().T


def _int_null(M: np.ndarray) -> np.ndarray:
    basis = nullspace([[int(v) for v in row] for row in M], M.shape[1])
    cols = []
    for v in basis:
        den = math.lcm(*(Fraction(x).denominator for x in v))
        ints = [int(Fraction(x) * den) for x in v]
        g = math.gcd(*ints) or 1
        cols.append([x // g for x in ints])
    if not cols:
        return np.zeros((M.shape[1], 0), dtype=np.int64)
    return np.array(cols, dtype=np.int64).T


def _solution_space(add, tuples, exact: bool, tol: float) -> np.ndarray:
    """Basis (columns) of the common kernel of every tuple's difference operator."""
    G = add.shape[0]
    if exact:
        N = np.eye(G, dtype=np.int64)
    else:
        N = np.eye(G)
    start = 0
    while N.shape[1]:
        t = _kernels.difference_scan(add, tuples, N.astype(np.float64), tol, start)
        if t < 0:
            break
        M = _kernels.apply_tuple(add, tuples[t], N)
        if exact:
            N = N @ _int_null(M)
            if N.size and np.abs(N).max() > 2**40:
                raise OverflowError("integer basis grew too large")
        else:
            N = N @ _float_null(M)
            if N.shape[1]:
                N, _ = np.linalg.qr(N)
        start = t + 1
    return N


def frechet_nullspaces(G: FiniteGroupSpec, n: int, exact: bool | None = None, seed: int = 0) -> FrechetResult:
    """Solution spaces of the product and the power form of Frechet's equation.

    Form 1 requires the ``(n+1)``-fold plain difference over every tuple
    ``(y_1, ..., y_{n+1})`` to vanish, form 2 only the ``(n+1)``-th power of
    each single difference. Each kernel is built by intersecting kernels
    tuple by tuple; equality is tested by running each basis through the
    other system. Groups with ``|G| <= 16`` use integer arithmetic.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    order = G.order
    if exact is None:
        exact = order <= 16
    add = G.addition_table()
    t1, sampled = _frech1_tuples(order, n, seed)
    t2 = _frech2_tuples(order, n)
    tol = 0.5 if exact else 1e-9 * 2 ** (n + 1)
    N1 = _solution_space(add, t1, exact, tol)
    N2 = _solution_space(add, t2, exact, tol)

    def inside(basis, tuples):
        if basis.shape[1] == 0:
            return True
        return _kernels.difference_scan(add, tuples, basis.astype(np.float64), tol, 0) < 0

    equal = inside(N1, t2) and inside(N2, t1)
    return FrechetResult(G.moduli, n, N1.shape[1], N2.shape[1], equal, sampled, exact, len(t1))


# ---------------------------------------------------------------------------
# random instances


@dataclass(frozen=True)
class Profile:
    dim: int = 1
    terms: int = 2
    min_terms: int = 1
    degree: int = 1
    separation: float = 0.1
    modulus: tuple = (0.5, 3.0)
    backend: str = "float"
    real_fraction: float = 0.5
    side: int | None = None
    min_side: int = 16

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "terms": self.terms,
            "min_terms": self.min_terms,
            "degree": self.degree,
            "separation": self.separation,
            "modulus": list(self.modulus),
            "backend": self.backend,
            "real_fraction": self.real_fraction,
            "side": self.side,
            "min_side": self.min_side,
        }


@dataclass
class Instance:
    f: ExpPoly
    lo: tuple
    hi: tuple
    samples: SampledFunction | None = None

    @property
    def order(self) -> int:
        """Largest annihilator degree the samples can need along an axis."""
        return sum(t.degree + 1 for t in self.f.terms)

    def to_json(self) -> dict:
        return {"f": self.f.to_json(), "lo": list(self.lo), "hi": list(self.hi)}


def _witness_distance(a: Witness, b: Witness) -> float:
    return max(abs(complex(x) - complex(y)) for x, y in zip(a.lam, b.lam))


def _exact_component(rng, lo: float, hi: float, real: bool) -> GaussianRational:
    while True:
        den = int(rng.integers(1, 4))
        re = Fraction(int(rng.integers(-3 * den, 3 * den + 1)), den)
        im = Fraction(0) if real else Fraction(int(rng.integers(-2 * den, 2 * den + 1)), den)
        z = GaussianRational(re, im)
        if z and lo <= abs(z) <= hi:
            return z


def _float_component(rng, lo: float, hi: float, real: bool) -> complex:
    r = float(rng.uniform(lo, hi))
    if real:
        return r if rng.random() < 0.5 else -r
    return r * complex(np.exp(1j * rng.uniform(-np.pi, np.pi)))


def _coefficient(rng, exact: bool):
    if exact:
        den = int(rng.integers(1, 4))
        num = int(rng.integers(1, 6)) * (1 if rng.random() < 0.5 else -1)
        im = int(rng.integers(-2, 3)) if rng.random() < 0.3 else 0
        return GaussianRational(Fraction(num, den), Fraction(im, den))
    mag = float(rng.uniform(0.5, 2.0))
    if rng.random() < 0.5:
        return mag if rng.random() < 0.5 else -mag
    return mag * complex(np.exp(1j * rng.uniform(-np.pi, np.pi)))


def random_exppoly(seed, profile: Profile | None = None) -> ExpPoly:
    """Reproducible random ExpPoly.

    ``seed`` is an int or a numpy Generator. Witness components have moduli
    in ``profile.modulus`` and distinct witnesses are at least
    ``profile.separation`` apart in max-norm. Each witness carries a
    polynomial of total degree exactly ``deg`` (drawn in ``0..profile.degree``).
    """
    p = profile or Profile()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    exact = p.backend == "exact"
    k = int(rng.integers(p.min_terms, p.terms + 1))
    lo_m, hi_m = p.modulus
    witnesses: list[Witness] = []
    while len(witnesses) < k:
        comps = []
        for _ in range(p.dim):
            real = rng.random() < p.real_fraction
            comps.append(_exact_component(rng, lo_m, hi_m, real) if exact else _float_component(rng, lo_m, hi_m, real))
        w = Witness(tuple(comps))
        if all(_witness_distance(w, v) >= p.separation for v in witnesses):
            witnesses.append(w)
    terms = []
    for w in witnesses:
        deg = int(rng.integers(0, p.degree + 1))
        monos = monomials_upto(p.dim, deg)
        top = [a for a in monos if sum(a) == deg]
        chosen = {top[int(rng.integers(len(top)))]}
        for a in monos:
            if rng.random() < 0.5:
                chosen.add(a)
        coeffs = {a: _coefficient(rng, exact) for a in sorted(chosen)}
        terms.append(ExpTerm(w, coeffs))
    return normalize(ExpPoly(p.dim, tuple(terms)))


def random_instance(seed: int, profile: Profile | None = None) -> Instance:
    """:func:`random_exppoly` plus its float samples on ``[0, side-1]**dim``.

    The box side defaults to ``max(min_side, 2 * order + 2)`` so every axis
    supports the annihilator.
    """
    p = profile or Profile()
    f = random_exppoly(seed, p)
    order = sum(t.degree + 1 for t in f.terms)
    side = p.side if p.side is not None else max(p.min_side, 2 * order + 2)
    lo = (0,) * p.dim
    hi = (side - 1,) * p.dim
    samples = sample(f, lo, hi, exact_values=False)
    return Instance(f, lo, hi, samples)


def load_instance(data) -> Instance:
    if isinstance(data, str):
        data = json.loads(data)
    f = ExpPoly.from_json(data["f"])
    lo, hi = tuple(data["lo"]), tuple(data["hi"])
    return Instance(f, lo, hi, sample(f, lo, hi, exact_values=False))


# ---------------------------------------------------------------------------
# closures


def fixpoint_closure(V: SpanSpace, ops: Sequence, limit: int = 200) -> SpanSpace:
    """Smallest space containing ``V`` and invariant under every operator.

    Each element of ``ops`` is an :class:`~expmontel.diffops.OpFactor` (its
    power is ignored: invariance under ``L`` is what is closed over).
    """
    W = V
    for _ in range(limit):
        images = [apply_phi_value(b, op.phi_value, op.shift, 1) for op in ops for b in W.basis]
        W2 = W.with_vectors(images)
        if W2.dim == W.dim:
            return W2
        W = W2
    raise RuntimeError("closure did not stabilise; is V inside a finite-dimensional invariant space?")
