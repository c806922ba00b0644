"""Exact linear algebra over a field of exact scalars (Fraction or GaussianRational)."""
from __future__ import annotations

from fractions import Fraction
from typing import Callable, Hashable, Iterable, Mapping


class Echelon:
    """Incrementally maintained reduced row echelon form over sparse rows.

    Rows are ``{column_key: value}`` dicts; ``order`` maps a column key to a
    sortable key so pivot choice is deterministic.
    """

    def __init__(self, order: Callable[[Hashable], object] = lambda k: k):
        self.order = order
        self.rows: dict = {}  # pivot column -> row with 1 at pivot

    @property
    def rank(self) -> int:
        return len(self.rows)

    def reduce(self, vec: Mapping) -> dict:
        v = {k: c for k, c in vec.items() if c}
        for p in [p for p in v if p in self.rows]:
            c = v.get(p)
            if not c:
                continue
            for k, r in self.rows[p].items():
                nv = v.get(k, 0) - c * r
                if nv:
                    v[k] = nv
                else:
                    v.pop(k, None)
        return v

    def contains(self, vec: Mapping) -> bool:
        return not self.reduce(vec)

    def add(self, vec: Mapping) -> bool:
        """Insert ``vec``; return False when it was already in the row space."""
        r = self.reduce(vec)
        if not r:
            return False
        p = min(r, key=self.order)
        inv = 1 / r[p]
        r = {k: c * inv for k, c in r.items()}
        for q, row in self.rows.items():
            c = row.get(p)
            if c:
                for k, val in r.items():
                    nv = row.get(k, 0) - c * val
                    if nv:
                        row[k] = nv
                    else:
                        row.pop(k, None)
        self.rows[p] = r
        return True

    def copy(self) -> "Echelon":
        e = Echelon(self.order)
        e.rows = {p: dict(r) for p, r in self.rows.items()}
        return e


def rref(rows: list[list], ncols: int) -> tuple[list[list], list[int]]:
    """Dense exact RREF; returns (reduced nonzero rows, pivot columns)."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def nullspace(rows: list[list], ncols: int) -> list[list]:
    """Exact basis of ``{v : A v = 0}`` for the dense matrix ``rows``."""
    red, pivots = rref([[Fraction(v) if isinstance(v, int) else v for v in row] for row in rows], ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for fc in free:
        v = [Fraction(0)] * ncols
        v[fc] = Fraction(1)
        for row, pc in zip(red, pivots):
            v[pc] = -row[fc]
        basis.append(v)
    return basis


def rank(rows: Iterable[list], ncols: int) -> int:
    rows = [[Fraction(v) if isinstance(v, int) else v for v in row] for row in rows]
    if not rows:
        return 0
    return len(rref(rows, ncols)[1])


def matmul(a: list[list], b: list[list]) -> list[list]:
    n, k, m = len(a), len(b), len(b[0]) if b else 0
    return [[sum((a[i][t] * b[t][j] for t in range(k)), 0) for j in range(m)] for i in range(n)]
