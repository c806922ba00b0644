"""Lattice helpers: does a set of shifts generate ``Z**d``?"""
from __future__ import annotations

from typing import Sequence

from sympy import Matrix, ZZ
from sympy.matrices.normalforms import invariant_factors as _sympy_invariant_factors

__all__ = ["invariant_factors", "generates_lattice", "unit_shifts"]


def invariant_factors(shifts: Sequence[Sequence[int]], dim: int) -> tuple[int, ...]:
    """Smith invariant factors of the ``dim x t`` matrix whose columns are ``shifts``.

    Zero factors mark a rank deficit.
    """
    if not shifts:
        return (0,) * dim
    cols = [list(map(int, y)) for y in shifts]
    if any(len(c) != dim for c in cols):
        raise ValueError("shift dimension differs from dim")
    m = Matrix(dim, len(cols), lambda i, j: cols[j][i])
    factors = tuple(abs(int(v)) for v in _sympy_invariant_factors(m, domain=ZZ))
    return factors + (0,) * (dim - len(factors))


def generates_lattice(shifts: Sequence[Sequence[int]], dim: int) -> bool:
    """True iff the integer span of ``shifts`` is all of ``Z**dim``."""
    f = invariant_factors(shifts, dim)
    return len(f) == dim and all(v == 1 for v in f)


def unit_shifts(dim: int) -> list[tuple[int, ...]]:
    return [tuple(1 if i == j else 0 for i in range(dim)) for j in range(dim)]
