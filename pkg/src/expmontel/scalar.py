"""Scalars for the two arithmetic backends.

The exact backend uses :class:`GaussianRational`, a complex number whose real
and imaginary parts are arbitrary precision rationals. The float backend uses
Python's built-in ``complex``. Mixing the two promotes to ``complex``.
"""
from __future__ import annotations

import cmath
import math
from fractions import Fraction
from numbers import Rational
from typing import Union

__all__ = [
    "GaussianRational",
    "Scalar",
    "EXACT",
    "FLOAT",
    "exact",
    "as_complex",
    "is_exact",
    "is_zero",
    "close",
    "scalar_to_json",
    "scalar_from_json",
    "EvaluationOverflow",
]

EXACT = "exact"
FLOAT = "float"


class GaussianRational:
    """Exact complex rational ``(re + im*i) / den`` kept in lowest terms."""

    __slots__ = ("_a", "_b", "_d")

    def __init__(self, re=0, im=0):
        re = Fraction(re)
        im = Fraction(im)
        d = re.denominator * im.denominator // math.gcd(re.denominator, im.denominator)
        self._set(re.numerator * (d // re.denominator), im.numerator * (d // im.denominator), d)

    def _set(self, a: int, b: int, d: int) -> None:
        if d < 0:
            a, b, d = -a, -b, -d
        g = math.gcd(a, b, d)
        if g > 1:
            a //= g
            b //= g
            d //= g
        self._a = a
        self._b = b
        self._d = d

    @classmethod
    def _raw(cls, a: int, b: int, d: int) -> "GaussianRational":
        obj = cls.__new__(cls)
        obj._set(a, b, d)
        return obj

    @classmethod
    def coerce(cls, x) -> "GaussianRational":
        if isinstance(x, GaussianRational):
            return x
        if isinstance(x, (int, Rational)):
            x = Fraction(x)
            return cls._raw(x.numerator, 0, x.denominator)
        if isinstance(x, str):
            return cls(Fraction(x))
        if isinstance(x, (tuple, list)) and len(x) == 2:
            return cls(Fraction(x[0]), Fraction(x[1]))
        raise TypeError(f"cannot convert {x!r} to GaussianRational")

    @property
    def real(self) -> Fraction:
        return Fraction(self._a, self._d)

    @property
    def imag(self) -> Fraction:
        return Fraction(self._b, self._d)

    def conjugate(self) -> "GaussianRational":
        return GaussianRational._raw(self._a, -self._b, self._d)

    def norm2(self) -> Fraction:
        """Squared modulus, exact."""
        return Fraction(self._a * self._a + self._b * self._b, self._d * self._d)

    # arithmetic -----------------------------------------------------------
    def _other(self, other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Rational)):
            other = Fraction(other)
            return GaussianRational._raw(other.numerator, 0, other.denominator)
        return None

    def __add__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) + other
            return NotImplemented
        if self._d == o._d:
            return GaussianRational._raw(self._a + o._a, self._b + o._b, self._d)
        return GaussianRational._raw(
            self._a * o._d + o._a * self._d, self._b * o._d + o._b * self._d, self._d * o._d
        )

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational._raw(-self._a, -self._b, self._d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) - other
            return NotImplemented
        if self._d == o._d:
            return GaussianRational._raw(self._a - o._a, self._b - o._b, self._d)
        return GaussianRational._raw(
            self._a * o._d - o._a * self._d, self._b * o._d - o._b * self._d, self._d * o._d
        )

    def __rsub__(self, other):
        return (-self).__add__(other)

    def __mul__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) * other
            return NotImplemented
        a, b, d = self._a, self._b, self._d
        c, e, f = o._a, o._b, o._d
        return GaussianRational._raw(a * c - b * e, a * e + b * c, d * f)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) / other
            return NotImplemented
        if not o:
            raise ZeroDivisionError("division by zero GaussianRational")
        a, b, d = self._a, self._b, self._d
        c, e, f = o._a, o._b, o._d
        # (a+bi)/d / ((c+ei)/f) = (a+bi)(c-ei) f / (d (c^2+e^2))
        return GaussianRational._raw((a * c + b * e) * f, (b * c - a * e) * f, d * (c * c + e * e))

    def __rtruediv__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return other / complex(self)
            return NotImplemented
        return o.__truediv__(self)

    def __pow__(self, n):
        if not isinstance(n, int):
            return complex(self) ** n
        if n < 0:
            return (GaussianRational._raw(1, 0, 1) / self) ** (-n)
        result = GaussianRational._raw(1, 0, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # comparison / conversion ---------------------------------------------
    def __eq__(self, other):
        o = self._other(other)
        if o is None:
            if isinstance(other, (float, complex)):
                return complex(self) == other
            return NotImplemented
        return self._a == o._a and self._b == o._b and self._d == o._d

    def __hash__(self):
        if self._b == 0:
            return hash(Fraction(self._a, self._d))
        return hash((self._a, self._b, self._d))

    def __bool__(self):
        return self._a != 0 or self._b != 0

    def __complex__(self):
        return complex(self._a / self._d, self._b / self._d)

    def __abs__(self):
        return math.hypot(self._a / self._d, self._b / self._d)

    def sort_key(self):
        return (self.real, self.imag)

    def __repr__(self):
        return f"GaussianRational({self.real}, {self.imag})"

    def __str__(self):
        re, im = self.real, self.imag
        if im == 0:
            return str(re)
        if re == 0:
            return f"{im}i"
        sign = "+" if im > 0 else "-"
        return f"({re}{sign}{abs(im)}i)"


Scalar = Union[GaussianRational, complex]


def exact(x) -> GaussianRational:
    """Convert ``x`` (int, Fraction, 'p/q', (re, im) pair, GaussianRational) exactly."""
    return GaussianRational.coerce(x)


def is_exact(x) -> bool:
    return isinstance(x, (GaussianRational, int, Rational))


def as_complex(x) -> complex:
    return complex(x)


def is_zero(x, tol: float = 0.0) -> bool:
    if isinstance(x, (GaussianRational, int, Rational)):
        return not x
    return abs(x) <= tol


def close(x, y, tol: float = 1e-12) -> bool:
    """Equality for exact scalars, ``|x - y| <= tol * max(1, |x|, |y|)`` otherwise."""
    if is_exact(x) and is_exact(y):
        return x == y
    x = complex(x)
    y = complex(y)
    return abs(x - y) <= tol * max(1.0, abs(x), abs(y))


def scalar_to_json(x):
    """Exact scalars become ``["p/q", "r/s"]``, float scalars ``[re, im]``."""
    if is_exact(x):
        g = GaussianRational.coerce(x)
        re, im = g.real, g.imag
        return [f"{re.numerator}/{re.denominator}", f"{im.numerator}/{im.denominator}"]
    z = complex(x)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"non-finite scalar {z!r}")
    return [z.real, z.imag]


def _is_intlike(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def scalar_from_json(v, backend: str | None = None):
    """Parse a JSON scalar.

    Strings are exact rationals, JSON integers are exact, JSON floats are
    complex floats. ``backend`` forces the result into one backend.
    """
    if isinstance(v, (list, tuple)):
        if len(v) != 2:
            raise ValueError(f"scalar must be a [re, im] pair, got {v!r}")
        parts = list(v)
    else:
        parts = [v, 0]
    if all(isinstance(p, str) or _is_intlike(p) for p in parts):
        val = GaussianRational(Fraction(parts[0]), Fraction(parts[1]))
        return complex(val) if backend == FLOAT else val
    for p in parts:
        if isinstance(p, bool) or not isinstance(p, (int, float, str)):
            raise ValueError(f"bad scalar component {p!r}")
    if backend == EXACT:
        return GaussianRational(Fraction(parts[0]), Fraction(parts[1]))
    return complex(float(Fraction(parts[0]) if isinstance(parts[0], str) else parts[0]),
                   float(Fraction(parts[1]) if isinstance(parts[1], str) else parts[1]))


def cpow(base, n: int):
    """``base**n`` for integer ``n``; exact stays exact, float raises on overflow."""
    if is_exact(base):
        return GaussianRational.coerce(base) ** n
    try:
        z = complex(base) ** n
    except OverflowError as exc:
        raise EvaluationOverflow(f"{base!r}**{n} overflows") from exc
    if not cmath.isfinite(z):
        raise EvaluationOverflow(f"{base!r}**{n} overflows")
    return z


class EvaluationOverflow(ArithmeticError):
    """A float-backend evaluation left the representable range."""
