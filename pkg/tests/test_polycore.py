from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wkexpansion.polycore import CRational, DimensionMismatch, I, MultiPoly, VarSpace, poly_vars

SPACE = VarSpace(1)
SPACE2 = VarSpace(2)

small = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@st.composite
def polys(draw, space=SPACE, max_terms=4, max_exp=3):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        exp = tuple(draw(st.integers(0, max_exp)) for _ in range(space.nvars))
        terms[exp] = CRational(draw(small), draw(small))
    return MultiPoly(space, terms)


def test_crational_arithmetic():
    a = CRational(Fraction(1, 2), 3)
    b = CRational(-1, Fraction(2, 3))
    assert a * b == CRational(Fraction(-1, 2) - 2, Fraction(1, 3) - 3)
    assert (a / b) * b == a
    assert I * I == CRational(-1)
    assert complex(a.conjugate()) == 0.5 - 3j


def test_varspace_layout():
    s = VarSpace(2)
    assert s.nvars == 5
    assert (s.x(0), s.x(1), s.p(0), s.p(1), s.t) == (0, 1, 2, 3, 4)
    with pytest.raises(ValueError):
        VarSpace(0)


@settings(max_examples=60, deadline=None)
@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a + b) + c == a + (b + c)
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    assert a - a == MultiPoly.zero(SPACE)
    assert a * MultiPoly.constant(SPACE, 1) == a


@settings(max_examples=60, deadline=None)
@given(polys(), polys())
def test_leibniz_rule(a, b):
    for v in range(SPACE.nvars):
        assert (a * b).diff(v) == a.diff(v) * b + a * b.diff(v)


@settings(max_examples=60, deadline=None)
@given(polys())
def test_integrate_then_differentiate(a):
    t = SPACE.t
    F = a.integrate_t()
    assert F.diff(t) == a
    assert F.subs(t, 0).is_zero()


@settings(max_examples=40, deadline=None)
@given(polys(SPACE2, max_exp=2), polys(SPACE2, max_exp=2))
def test_eval_is_homomorphism(a, b):
    rng = np.random.default_rng(1)
    pts = rng.uniform(-1, 1, size=(8, SPACE2.nvars))
    np.testing.assert_allclose((a * b).eval_many(pts), a.eval_many(pts) * b.eval_many(pts), atol=1e-9)
    np.testing.assert_allclose((a + b).eval_many(pts), a.eval_many(pts) + b.eval_many(pts), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(polys(SPACE2))
def test_serialization_round_trip(a):
    assert MultiPoly.parse(a.serialize(), n=2) == a
    if not a.is_zero():
        assert MultiPoly.parse(a.serialize()) == a


def test_parse_zero_needs_dimension():
    with pytest.raises(ValueError):
        MultiPoly.parse("")


def test_serialization_canonical_order():
    x, p, t = poly_vars(SPACE)
    f = t + x[0] ** 2 + 3
    lines = f.serialize().strip().splitlines()
    assert [tuple(map(int, ln.split()[2:])) for ln in lines] == [(2, 0, 0), (0, 0, 1), (0, 0, 0)]


def test_parse_rejects_bad_lines():
    with pytest.raises(ValueError):
        MultiPoly.parse("1/1 0/1 1 2\n")
    with pytest.raises(ValueError):
        MultiPoly.parse("1/x 0/1 1 0 0\n")


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        MultiPoly.constant(SPACE) + MultiPoly.constant(SPACE2)


def test_parity_filter_and_flip():
    x, p, t = poly_vars(SPACE)
    f = p[0] * x[0] + p[0] ** 2 + t * p[0]
    even, odd = f.parity_filter(SPACE.p_vars)
    assert even == p[0] ** 2
    assert odd == p[0] * x[0] + t * p[0]
    assert f.flip_sign(SPACE.p_vars) == even - odd


def test_real_and_imaginary_parts():
    x, p, t = poly_vars(SPACE)
    f = x[0] + (p[0] * t).scale(I)
    assert f.real_part() == x[0]
    assert f.imag_part() == p[0] * t
    assert f.conjugate() == x[0] - (p[0] * t).scale(I)
    assert not f.is_real() and not f.is_imaginary()


def test_degree_and_dependence():
    x, p, t = poly_vars(SPACE2)
    f = x[0] ** 2 * x[1] ** 2 * t + p[1]
    assert f.degree() == 5
    assert f.degree(SPACE2.x_vars) == 4
    assert f.min_degree() == 1
    assert f.depends_on(SPACE2.t) and not f.depends_on(SPACE2.p(0))
