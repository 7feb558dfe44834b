from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from canforge.arith import (
    AMBIENT,
    INFINITY,
    PLANE,
    QQ,
    Field,
    ParseError,
    Poly,
    gaussian_field,
    in_m_squared,
    is_associate,
    monomials_upto,
    ord,
    parse_field,
    parse_poly,
    series_inverse,
    series_sqrt,
)

from strategies import polys, small_frac


def P(text, field=QQ):
    return parse_poly(text, PLANE, field)


# -- fields -----------------------------------------------------------------


@pytest.mark.parametrize("minpoly", [(1, 0, 1), (-2, 0, 1), (1, 1, 1), (-2, 0, 0, 1)])
def test_irreducible_minpolys_accepted(minpoly):
    assert Field(minpoly).degree == len(minpoly) - 1


@pytest.mark.parametrize("minpoly", [(-1, 0, 1), (0, 1, 1), (2, 0, 1, 0), (4, 0, 0, 0, 1)])
def test_reducible_or_non_monic_rejected(minpoly):
    with pytest.raises(ValueError):
        Field(minpoly)


def test_quartic_irreducibility_uses_full_factorization():
    # x^4 + 1 has no rational root but also no quadratic split over Q
    assert Field((1, 0, 0, 0, 1)).degree == 4
    with pytest.raises(ValueError):
        Field((4, 0, 0, 0, 1))  # x^4 + 4 = (x^2 + 2x + 2)(x^2 - 2x + 2)


@pytest.mark.parametrize("text, degree", [("Q", 1), ("Q(i)", 2), ("Q(i): t^2+1", 2),
                                          ("Q(s): t^2-2", 2)])
def test_parse_field(text, degree):
    assert parse_field(text).degree == degree


@pytest.mark.parametrize("text", ["R", "Q(i): t^2-1", "Q(i): t^2+"])
def test_parse_field_errors(text):
    with pytest.raises(ValueError):
        parse_field(text)


@given(st.tuples(small_frac, small_frac))
def test_gaussian_inverse_exact(ab):
    K = gaussian_field()
    a = K(ab[0]) + K(ab[1]) * K.gen()
    assert a + (-a) == 0
    if a != 0:
        assert a * a.inverse() == 1


def test_gaussian_sqrt_of_minus_one():
    K = gaussian_field()
    r = K.sqrt(-1)
    assert r * r == -1
    assert QQ.sqrt(-1) is None
    assert QQ.sqrt(Fraction(9, 4)) == Fraction(3, 2)


# -- polynomials ------------------------------------------------------------


@pytest.mark.parametrize(
    "text, nterms",
    [("x^2 + x^3 + y^2", 3), ("0", 0), ("(x+y)*(x-y)", 2), ("2x*y - y", 2), ("3", 1)],
)
def test_parse_term_counts(text, nterms):
    assert len(P(text).terms) == nterms


def test_parse_expansion():
    assert P("(x+y)*(x-y)") == P("x^2 - y^2")
    assert P("0").terms == {}
    assert P("x/2") * 2 == P("x")


@pytest.mark.parametrize(
    "text, exc_fragment",
    [("x + z", "unknown variable 'z'"), ("x +* y", "syntax"), ("x/y", "division"),
     ("i*x", "extension symbol 'i' used over Q"), ("x**2", "use ^")],
)
def test_parse_errors(text, exc_fragment):
    with pytest.raises(ParseError) as err:
        P(text)
    assert exc_fragment in str(err.value)


def test_parse_error_has_position():
    with pytest.raises(ParseError) as err:
        P("x + )")
    assert err.value.position is not None


def test_extension_symbol_over_extension():
    K = gaussian_field()
    p = P("x + i*y", K)
    assert p.terms[(0, 1)] == K.gen()


@given(polys(), polys(), polys())
def test_ring_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a - a == Poly.zero(PLANE)


@given(polys(), polys(), st.integers(0, 4))
def test_truncated_mul_agrees_with_truncation(a, b, N):
    assert a.mul(b, N) == (a * b).truncate(N)


@given(polys())
def test_no_stored_zeros(a):
    assert all(c != 0 for c in (a * 0 + a).terms.values())
    assert all(len(e) == 2 for e in a.terms)


def test_monomial_counts():
    assert len(monomials_upto(4, 6)) == 210
    assert len(monomials_upto(2, 3)) == 10


# -- m-adic operations ------------------------------------------------------


@pytest.mark.parametrize("text, expected", [("x^2 + y^3", 2), ("0", INFINITY), ("x + y^5", 1)])
def test_ord(text, expected):
    assert ord(P(text)) == expected


@pytest.mark.parametrize("text, expected", [("x", False), ("x^2 + y^3", True), ("x + y^5", False)])
def test_in_m_squared(text, expected):
    assert in_m_squared(P(text)) is expected


def test_in_m_squared_rejects_unit():
    with pytest.raises(ValueError):
        in_m_squared(P("1 + x"))


@pytest.mark.parametrize(
    "text, N, expected",
    [("1+x", 2, "1 - x + x^2"), ("2", 5, "1/2"), ("1+x+y", 1, "1 - x - y")],
)
def test_series_inverse(text, N, expected):
    assert series_inverse(P(text), N) == P(expected)


def test_series_inverse_rejects_non_unit():
    with pytest.raises(ValueError):
        series_inverse(P("x"), 3)


@pytest.mark.parametrize(
    "text, N, expected",
    [("1+x", 2, "1 + x/2 - x^2/8"), ("1", 7, "1"), ("4+4*x", 1, "2 + x")],
)
def test_series_sqrt(text, N, expected):
    s = series_sqrt(P(text), N)
    assert s == P(expected)
    assert s.mul(s, N) == P(text).truncate(N)


def test_series_sqrt_non_square_constant():
    with pytest.raises(ValueError):
        series_sqrt(P("-1 + x"), 3)


@given(polys(max_deg=2).filter(lambda p: p.constant_term() != 0), st.integers(0, 5))
def test_series_inverse_property(f, N):
    one = Poly.const(PLANE, 1)
    assert f.mul(series_inverse(f, N), N) == one


@pytest.mark.parametrize(
    "f, g, expected",
    [("x", "2*x", True), ("x", "x + x^2", True), ("x", "y", False),
     ("y^2 - x^3", "(1+x)*(y^2 - x^3)", True), ("x*y", "x^2", False)],
)
def test_is_associate(f, g, expected):
    assert is_associate(P(f), P(g)) is expected


def test_is_associate_rejects_zero():
    with pytest.raises(ValueError):
        is_associate(P("0"), P("x"))


def test_ambient_embedding_roundtrip():
    p = P("x^2 + 3*y")
    assert p.embed(AMBIENT).embed(PLANE) == p
