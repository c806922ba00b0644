"""Plain and modified difference operators.

``Delta_{phi;y} f(x) = f(x + y) - phi(y) f(x)``. Symbolic application keeps an
:class:`~expmontel.exppoly.ExpPoly` inside its class because only the number
``phi(y)`` enters; sampled application works on a finite box and shrinks it.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

from . import _kernels
from .exppoly import (
    DimensionMismatch,
    ExpPoly,
    ExpTerm,
    Witness,
    evaluate,
    normalize,
    shift_polynomial,
)
from .scalar import (
    EXACT,
    GaussianRational,
    exact,
    is_exact,
    is_zero,
    scalar_from_json,
    scalar_to_json,
)

__all__ = [
    "Box",
    "SampledFunction",
    "PhiTable",
    "OpFactor",
    "DiffProduct",
    "InsufficientBox",
    "MissingPhiValue",
    "apply_modified",
    "apply_phi_value",
    "apply_product",
    "apply_sampled",
    "apply_product_sampled",
    "plain_difference",
    "difmod_identity_check",
    "sample",
]


class InsufficientBox(ValueError):
    """The sample box is too small for the requested operator."""


class MissingPhiValue(KeyError):
    pass


def _pt(v) -> tuple[int, ...]:
    return tuple(int(a) for a in v)


@dataclass(frozen=True)
class Box:
    """Inclusive axis-aligned box ``[lo, hi]`` in ``Z**d``."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo, hi = _pt(self.lo), _pt(self.hi)
        if len(lo) != len(hi) or not lo:
            raise DimensionMismatch("box corners differ in dimension")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def of(cls, box) -> "Box":
        if isinstance(box, Box):
            return box
        lo, hi = box
        return cls(lo, hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(h - l + 1 for l, h in zip(self.lo, self.hi))

    @property
    def empty(self) -> bool:
        return any(h < l for l, h in zip(self.lo, self.hi))

    def points(self):
        return itertools.product(*(range(l, h + 1) for l, h in zip(self.lo, self.hi)))

    def contains(self, x) -> bool:
        return all(l <= v <= h for l, v, h in zip(self.lo, x, self.hi))

    def intersect(self, other: "Box") -> "Box":
        return Box(
            tuple(max(a, b) for a, b in zip(self.lo, other.lo)),
            tuple(min(a, b) for a, b in zip(self.hi, other.hi)),
        )

    def shrink(self, y, power: int = 1) -> "Box":
        """Points ``x`` with ``x + k*y`` inside for all ``0 <= k <= power``."""
        lo = tuple(l - min(0, power * v) for l, v in zip(self.lo, y))
        hi = tuple(h - max(0, power * v) for h, v in zip(self.hi, y))
        return Box(lo, hi)


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values of an otherwise unknown function on an inclusive box.

    ``values`` is a complex128 array, or an object array of
    :class:`GaussianRational` for exact samples, indexed ``values[x - lo]``.
    """

    dim: int
    lo: tuple
    hi: tuple
    values: np.ndarray

    def __post_init__(self):
        lo, hi = _pt(self.lo), _pt(self.hi)
        if len(lo) != self.dim or len(hi) != self.dim:
            raise DimensionMismatch("box corners do not match dim")
        box = Box(lo, hi)
        if box.empty:
            raise InsufficientBox("empty sample box")
        vals = np.asarray(self.values)
        if vals.dtype != object:
            vals = vals.astype(np.complex128, copy=False)
        if vals.size != int(np.prod(box.shape)):
            raise ValueError(f"expected {int(np.prod(box.shape))} values, got {vals.size}")
        vals = vals.reshape(box.shape)
        vals.setflags(write=False)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", vals)

    @property
    def box(self) -> Box:
        return Box(self.lo, self.hi)

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def at(self, x):
        x = _pt(x)
        if not self.box.contains(x):
            raise InsufficientBox(f"point {x} outside sample box")
        return self.values[tuple(v - l for v, l in zip(x, self.lo))]

    def restrict(self, box) -> "SampledFunction":
        box = Box.of(box)
        inner = self.box.intersect(box)
        if inner.empty:
            raise InsufficientBox("restriction box misses the samples")
        sl = tuple(slice(a - l, b - l + 1) for a, b, l in zip(inner.lo, inner.hi, self.lo))
        return SampledFunction(self.dim, inner.lo, inner.hi, self.values[sl])

    def max_abs(self) -> float:
        if self.values.size == 0:
            return 0.0
        if self.exact:
            return max(abs(v) for v in self.values.flat)
        return float(np.max(np.abs(self.values)))

    def to_float(self) -> "SampledFunction":
        if not self.exact:
            return self
        vals = np.array([complex(v) for v in self.values.flat], dtype=np.complex128)
        return SampledFunction(self.dim, self.lo, self.hi, vals.reshape(self.values.shape))

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "lo": list(self.lo),
            "hi": list(self.hi),
            "values": [scalar_to_json(v) for v in self.values.flat],
        }

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "SampledFunction":
        if isinstance(data, str):
            data = json.loads(data)
        vals = [scalar_from_json(v, backend) for v in data["values"]]
        if vals and all(is_exact(v) for v in vals):
            arr = np.empty(len(vals), dtype=object)
            arr[:] = [exact(v) for v in vals]
        else:
            arr = np.array([complex(v) for v in vals], dtype=np.complex128)
        return cls(int(data["dim"]), data["lo"], data["hi"], arr)


def sample(f: ExpPoly, lo, hi, exact_values: bool | None = None) -> SampledFunction:
    """Tabulate ``f`` on the inclusive box ``[lo, hi]``.

    Exact ExpPolys give exact samples unless ``exact_values=False``.
    """
    box = Box(lo, hi)
    if box.dim != f.dim:
        raise DimensionMismatch("box dimension differs from f")
    if exact_values is None:
        exact_values = f.backend == EXACT
    if exact_values:
        if f.backend != EXACT:
            raise ValueError("cannot take exact samples of a float ExpPoly")
        arr = np.empty(box.shape, dtype=object)
        for x in box.points():
            arr[tuple(v - l for v, l in zip(x, box.lo))] = evaluate(f, x)
        return SampledFunction(f.dim, box.lo, box.hi, arr)
    axes = [np.arange(l, h + 1) for l, h in zip(box.lo, box.hi)]
    total = np.zeros(box.shape, dtype=np.complex128)
    for t in f.terms:
        powers = []
        for lam, ax in zip(t.witness.lam, axes):
            lam = complex(lam)
            powers.append(np.array([lam ** int(k) for k in ax], dtype=np.complex128))
        exp_part = _outer(powers)
        poly = np.zeros(box.shape, dtype=np.complex128)
        for alpha, c in t.coeffs.items():
            mono = _outer([ax.astype(np.float64) ** a for ax, a in zip(axes, alpha)])
            poly += complex(c) * mono
        total += poly * exp_part
    if not np.all(np.isfinite(total)):
        from .scalar import EvaluationOverflow

        raise EvaluationOverflow("sampled values overflow")
    return SampledFunction(f.dim, box.lo, box.hi, total)


def _outer(vectors):
    out = np.asarray(vectors[0])
    for v in vectors[1:]:
        out = np.multiply.outer(out, v)
    return out


@dataclass(frozen=True, eq=False)
class PhiTable:
    """Values ``phi(y)`` of an arbitrary function on the shifts actually used."""

    values: Mapping

    def __post_init__(self):
        object.__setattr__(self, "values", {_pt(k): v for k, v in dict(self.values).items()})

    def __call__(self, y):
        y = _pt(y)
        try:
            return self.values[y]
        except KeyError:
            raise MissingPhiValue(f"no phi value for shift {y}") from None

    @classmethod
    def from_witness(cls, w: Witness, shifts: Iterable) -> "PhiTable":
        return cls({_pt(y): w(y) for y in shifts})

    def check(self) -> "PhiTable":
        """``phi_check(x) = phi(-x)`` on the negated shifts."""
        return PhiTable({tuple(-a for a in k): v for k, v in self.values.items()})

    def to_json(self):
        return [{"y": list(k), "value": scalar_to_json(v)} for k, v in self.values.items()]

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "PhiTable":
        return cls({_pt(e["y"]): scalar_from_json(e["value"], backend) for e in data})


Phi = Union[Witness, PhiTable]


def phi_at(phi, y):
    """``phi(y)`` for a witness, a table, or a bare scalar (taken as the value)."""
    if isinstance(phi, (Witness, PhiTable)):
        return phi(y)
    return phi


@dataclass(frozen=True)
class OpFactor:
    """``Delta_{phi;shift}**power``."""

    phi: object
    shift: tuple
    power: int = 1

    def __post_init__(self):
        object.__setattr__(self, "shift", _pt(self.shift))
        if int(self.power) < 1:
            raise ValueError("operator power must be >= 1")
        object.__setattr__(self, "power", int(self.power))
        if isinstance(self.phi, Witness) and self.phi.dim != len(self.shift):
            raise DimensionMismatch("witness and shift dimensions differ")

    @property
    def phi_value(self):
        return phi_at(self.phi, self.shift)

    def to_json(self) -> dict:
        if isinstance(self.phi, Witness):
            head = {"lambda": self.phi.to_json()}
        elif isinstance(self.phi, PhiTable):
            head = {"phi": self.phi.to_json()}
        else:
            head = {"phi": [{"y": list(self.shift), "value": scalar_to_json(self.phi)}]}
        return {**head, "shift": list(self.shift), "power": self.power}

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "OpFactor":
        if "lambda" in data:
            phi = Witness.from_json(data["lambda"], backend)
        else:
            phi = PhiTable.from_json(data["phi"], backend)
        return cls(phi, data["shift"], data.get("power", 1))


@dataclass(frozen=True)
class DiffProduct:
    """Ordered composition of :class:`OpFactor`; empty means identity."""

    factors: tuple = ()

    def __post_init__(self):
        factors = tuple(self.factors)
        dims = {len(f.shift) for f in factors}
        if len(dims) > 1:
            raise DimensionMismatch("operator factors differ in dimension")
        object.__setattr__(self, "factors", factors)

    def to_json(self) -> dict:
        return {"factors": [f.to_json() for f in self.factors]}

    @classmethod
    def from_json(cls, data, backend: str | None = None) -> "DiffProduct":
        if isinstance(data, str):
            data = json.loads(data)
        return cls(tuple(OpFactor.from_json(f, backend) for f in data["factors"]))


# ---------------------------------------------------------------------------
# symbolic application


def _new_term(w: Witness, coeffs: dict) -> ExpTerm:
    t = object.__new__(ExpTerm)
    object.__setattr__(t, "witness", w)
    object.__setattr__(t, "coeffs", coeffs)
    return t


def _coerce_value(c, exact_backend: bool):
    if exact_backend and is_exact(c):
        return exact(c)
    return complex(c)


def apply_phi_value(f: ExpPoly, value, y, power: int = 1) -> ExpPoly:
    """``(tau_y - value * tau_0)**power f`` for a number ``value = phi(y)``."""
    y = _pt(y)
    if len(y) != f.dim:
        raise DimensionMismatch("shift dimension differs from f")
    if power < 0:
        raise ValueError("power must be >= 0")
    if power == 0:
        return f
    exact_backend = f.backend == EXACT and is_exact(value)
    if not exact_backend:
        f = f.to_float()
    c = _coerce_value(value, exact_backend)
    zero_shift = not any(y)
    terms = []
    for t in f.terms:
        ey = t.witness(y)
        coeffs = t.coeffs
        for _ in range(power):
            shifted = coeffs if zero_shift else shift_polynomial(coeffs, y)
            nxt = {}
            for a, v in shifted.items():
                nxt[a] = ey * v
            for a, v in coeffs.items():
                nxt[a] = nxt[a] - c * v if a in nxt else -(c * v)
            coeffs = {a: v for a, v in nxt.items() if not is_zero(v)}
            if not coeffs:
                break
        if coeffs:
            terms.append(_new_term(t.witness, coeffs))
    return normalize(ExpPoly(f.dim, tuple(terms)))


def apply_modified(f: ExpPoly, w: Witness, y, power: int = 1) -> ExpPoly:
    """``Delta_{w;y}**power f`` with the exponential ``w`` supplying ``w(y)``."""
    if not isinstance(w, Witness):
        w = Witness(tuple(w))
    if w.dim != f.dim:
        raise DimensionMismatch("witness dimension differs from f")
    return apply_phi_value(f, w(y), y, power)


def apply_product(f: ExpPoly, P: DiffProduct) -> ExpPoly:
    """Apply the factors of ``P`` left to right (they commute)."""
    g = f
    for fac in P.factors:
        if len(fac.shift) != f.dim:
            raise DimensionMismatch("factor dimension differs from f")
        g = apply_phi_value(g, fac.phi_value, fac.shift, fac.power)
        if not g.terms:
            break
    return g


def plain_difference(f: ExpPoly, shifts: Sequence) -> ExpPoly:
    """``Delta_{y_1} ... Delta_{y_m} f`` with ``phi = 1``."""
    one = GaussianRational(1)
    g = f
    for y in shifts:
        g = apply_phi_value(g, one, y, 1)
    return g


# ---------------------------------------------------------------------------
# sampled application


def apply_sampled(s: SampledFunction, phi, y, power: int = 1) -> SampledFunction:
    """``Delta_{phi;y}**power`` on samples; the box shrinks by ``power * y``."""
    y = _pt(y)
    if len(y) != s.dim:
        raise DimensionMismatch("shift dimension differs from samples")
    if power < 1:
        raise ValueError("power must be >= 1")
    c = phi_at(phi, y)
    out_box = s.box.shrink(y, power)
    if out_box.empty:
        raise InsufficientBox(f"box {s.lo}..{s.hi} too small for shift {y} with power {power}")
    vals = s.values
    if s.exact and is_exact(c):
        c = exact(c)
    else:
        if s.exact:
            vals = s.to_float().values
        c = complex(c)
    for _ in range(power):
        vals = _kernels.shift_combine(vals, y, c)
    return SampledFunction(s.dim, out_box.lo, out_box.hi, vals)


def apply_product_sampled(s: SampledFunction, P: DiffProduct) -> SampledFunction:
    out = s
    for fac in P.factors:
        out = apply_sampled(out, fac.phi, fac.shift, fac.power)
    return out


# ---------------------------------------------------------------------------
# the identity relating modified and plain differences


def difmod_identity_check(f, phi: Witness, shifts: Sequence, box, rtol: float = 1e-10) -> bool:
    """Check ``Delta_{phi;y_1..y_m} f(x) = phi(x + sum y) Delta_{y_1..y_m}(f * phi_check)(x)``.

    The left side goes through the operator machinery (symbolic for an
    ExpPoly, box-shrinking for samples); the right side is expanded pointwise
    as an alternating sum over subsets of the shifts. Exact inputs are
    compared exactly, float inputs to ``rtol`` of the natural magnitude of
    the terms involved.
    """
    if not isinstance(phi, Witness):
        raise TypeError("the identity needs phi to be an exponential witness")
    shifts = [_pt(y) for y in shifts]
    box = Box.of(box)
    dim = f.dim
    if phi.dim != dim or box.dim != dim or any(len(y) != dim for y in shifts):
        raise DimensionMismatch("dimensions differ")
    m = len(shifts)
    total_shift = tuple(sum(col) for col in zip(*shifts)) if shifts else (0,) * dim
    subsets = []
    for mask in range(1 << m):
        off = [0] * dim
        for i in range(m):
            if mask >> i & 1:
                off = [a + b for a, b in zip(off, shifts[i])]
        sign = -1 if (m - bin(mask).count("1")) % 2 else 1
        subsets.append((sign, tuple(off)))

    if isinstance(f, SampledFunction):
        lhs_s = f
        for y in shifts:
            lhs_s = apply_sampled(lhs_s, phi, y, 1)
        check_box = box.intersect(lhs_s.box)
        if check_box.empty or check_box != box:
            raise InsufficientBox("samples do not cover the check box")
        exact_mode = f.exact and phi.exact
        value_at = f.at
        lhs_at = lhs_s.at
    else:
        g = apply_product(f, DiffProduct(tuple(OpFactor(phi, y, 1) for y in shifts)))
        exact_mode = f.backend == EXACT and phi.exact
        value_at = lambda x: evaluate(f, x)  # noqa: E731
        lhs_at = lambda x: evaluate(g, x)  # noqa: E731

    phi_f = phi if exact_mode else phi.to_float()
    for x in box.points():
        rhs = 0
        scale = 0.0
        for sign, off in subsets:
            z = tuple(a + b for a, b in zip(x, off))
            v = value_at(z) * phi_f(tuple(-a for a in z))
            rhs = rhs + sign * v
            if not exact_mode:
                scale += abs(complex(v))
        pref = phi_f(tuple(a + b for a, b in zip(x, total_shift)))
        rhs = pref * rhs
        lhs = lhs_at(x)
        if exact_mode:
            if exact(lhs) != exact(rhs):
                return False
        else:
            lhs, rhs = complex(lhs), complex(rhs)
            bound = rtol * max(abs(complex(pref)) * scale, abs(lhs), abs(rhs))
            if abs(lhs - rhs) > bound:
                return False
    return True
