from __future__ import annotations

from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from expmontel import ExpPoly, ExpTerm, GaussianRational, Witness, monomials_upto, normalize

settings.register_profile(
    "repo",
    max_examples=60,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def q(re, im=0) -> GaussianRational:
    return GaussianRational(Fraction(re), Fraction(im))


def mono(lam, alpha=None, c=1) -> ExpPoly:
    """Exact ``c * n**alpha * lam**n``."""
    w = Witness(tuple(q(v) if not isinstance(v, GaussianRational) else v for v in lam))
    return ExpPoly.monomial(w, alpha, q(c) if not isinstance(c, GaussianRational) else c)


def small_rational(nonzero=False):
    base = st.builds(
        lambda a, b, d: GaussianRational(Fraction(a, d), Fraction(b, d)),
        st.integers(-6, 6),
        st.integers(-3, 3),
        st.integers(1, 3),
    )
    return base.filter(bool) if nonzero else base


@st.composite
def exact_exppolys(draw, dim=None, max_terms=4, max_degree=3):
    d = draw(st.integers(1, 3)) if dim is None else dim
    k = draw(st.integers(0, max_terms))
    terms = []
    for _ in range(k):
        w = Witness(tuple(draw(small_rational(nonzero=True)) for _ in range(d)))
        deg = draw(st.integers(0, max_degree))
        monos = monomials_upto(d, deg)
        picked = draw(st.lists(st.sampled_from(monos), min_size=1, max_size=3, unique=True))
        terms.append(ExpTerm(w, {a: draw(small_rational(nonzero=True)) for a in picked}))
    return normalize(ExpPoly(d, tuple(terms)))


def points(dim, lo=-4, hi=4):
    return st.tuples(*[st.integers(lo, hi)] * dim)


@pytest.fixture
def n2n():
    """``n * 2**n`` on Z."""
    return mono([2], (1,))
