from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from contractsos.polyalg import (
    PolyMatrix, PolySyntaxError, Polynomial, UndeclaredSymbol, format_polynomial, grlex_key,
    jacobian, lie_derivative_matrix, matrices_close, monomials_upto, parse_polynomial, polys_close,
    rate_matrix,
)

X = ("x1", "x2")
JET = ("phi", "psi")


def P(text, names=X):
    return parse_polynomial(text, names)


def polys(names=X, max_deg=4, coef=st.integers(-10, 10)):
    n = len(names)
    mono = st.lists(st.integers(0, max_deg), min_size=n, max_size=n).filter(lambda e: sum(e) <= max_deg)
    return st.dictionaries(mono.map(tuple), coef, max_size=6).map(
        lambda d: Polynomial(names, {k: float(v) for k, v in d.items()}))


# -- add / multiply ------------------------------------------------------------

def test_add_cancellation():
    assert P("x1^2 + 1") + P("-x1^2") == P("1")


def test_add_zero_identity():
    p = P("3*x1*x2 - x2^3 + 2")
    assert p + Polynomial.zero(X) == p


def test_add_like_terms():
    assert P("2*x1*x2") + P("3*x1*x2") == P("5*x1*x2")


def test_add_variable_mismatch():
    with pytest.raises(ValueError):
        P("x1") + parse_polynomial("y", ("y",))


def test_multiply_difference_of_squares():
    assert P("x1 + 1") * P("x1 - 1") == P("x1^2 - 1")


def test_multiply_identity():
    p = P("x1^3 - 2*x2")
    assert p * Polynomial.constant(X, 1.0) == p


def test_multiply_binomial():
    assert P("x1 + x2") ** 2 == P("x1^2 + 2*x1*x2 + x2^2")


def test_no_zero_coefficients_stored():
    p = P("x1 - x1 + x2")
    assert all(c != 0 for c in p.terms.values())
    assert (P("x1") - P("x1")).is_zero()


@given(polys(), polys(), polys())
def test_ring_distributive(a, b, c):
    assert a * (b + c) == a * b + a * c


@given(polys(), polys())
def test_ring_commutative(a, b):
    assert a * b == b * a
    assert a + b == b + a


@given(polys(), polys(), polys())
def test_ring_associative(a, b, c):
    assert (a * b) * c == a * (b * c)


@settings(max_examples=60)
@given(polys(max_deg=4, coef=st.floats(-10, 10, allow_nan=False)),
       polys(max_deg=4, coef=st.floats(-10, 10, allow_nan=False)),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2)))
def test_evaluate_multiply(a, b, pt):
    lhs = (a * b).evaluate(pt)
    rhs = a.evaluate(pt) * b.evaluate(pt)
    scale = sum(abs(c) for c in a.terms.values()) * sum(abs(c) for c in b.terms.values()) * 2.0 ** 8
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, scale)


def test_multiply_degree_adds():
    a, b = P("x1^2*x2 + 1"), P("x2^3 - x1")
    assert (a * b).degree() == a.degree() + b.degree()


# -- differentiate ---------------------------------------------------------------

def test_power_rule():
    assert P("x1^3").differentiate(0) == P("3*x1^2")


def test_derivative_independent_variable():
    assert P("x1^2").differentiate(1).is_zero()


def test_jet_first_component_derivative():
    f1 = P("-psi - 3/2*phi^2 - 1/2*phi^3", JET)
    assert f1.differentiate("phi") == P("-3*phi - 3/2*phi^2", JET)


@settings(max_examples=60)
@given(polys(max_deg=5, coef=st.floats(-10, 10, allow_nan=False)),
       st.tuples(st.floats(-2, 2), st.floats(-2, 2)), st.integers(0, 1))
def test_derivative_matches_finite_difference(p, pt, var):
    h = 1e-5
    up, dn = list(pt), list(pt)
    up[var] += h
    dn[var] -= h
    fd = (p.evaluate(up) - p.evaluate(dn)) / (2 * h)
    exact = p.differentiate(var).evaluate(pt)
    scale = sum(abs(c) for c in p.terms.values()) * 3.0 ** 5
    assert abs(fd - exact) <= 1e-6 * max(1.0, abs(exact)) + 1e-9 * scale


# -- jacobian / Lie derivative ----------------------------------------------------

def test_jacobian_vdp():
    names = ("x1", "x2", "k")
    f = [parse_polynomial("x2", names), parse_polynomial("-(x1^2 + k)*x2 - x1", names)]
    J = jacobian(f)
    expect = [["0", "1"], ["-1 - 2*x1*x2", "-x1^2 - k"]]
    for i in range(2):
        for j in range(2):
            assert J[i, j] == parse_polynomial(expect[i][j], names)


def test_jacobian_linear():
    J = jacobian([P("x2"), P("-x1")])
    assert np.array_equal(J.evaluate((0.3, -0.7)), [[0, 1], [-1, 0]])
    assert not J.symmetric


def test_jacobian_jet():
    J = jacobian([P("-psi - 3/2*phi^2 - 1/2*phi^3", JET), P("3*phi - psi", JET)])
    assert J[0, 0] == P("-3*phi - 3/2*phi^2", JET)
    assert J[0, 1] == P("-1", JET)
    assert J[1, 0] == P("3", JET)
    assert J[1, 1] == P("-1", JET)


def test_jacobian_length_mismatch():
    with pytest.raises(ValueError):
        jacobian([P("x1"), P("x2"), P("x1")])


def test_lie_derivative_constant_metric():
    M = PolyMatrix.from_numbers(X, [[2.0, 0.5], [0.5, 1.0]])
    D = lie_derivative_matrix(M, [P("x2 + x1^3"), P("-x1")])
    assert all(p.is_zero() for r in D.entries for p in r)


def test_lie_derivative_chain_rule():
    M = PolyMatrix([[P("x1^2"), P("0")], [P("0"), P("1")]], symmetric=True)
    D = lie_derivative_matrix(M, [P("1"), P("0")])
    assert D[0, 0] == P("2*x1")
    assert D[0, 1].is_zero() and D[1, 1].is_zero()


@settings(max_examples=30)
@given(polys(max_deg=2), polys(max_deg=2), polys(max_deg=2), polys(max_deg=3), polys(max_deg=3))
def test_lie_derivative_symmetric(a, b, c, f1, f2):
    M = PolyMatrix([[a, b], [b, c]], symmetric=True)
    D = lie_derivative_matrix(M, [f1, f2])
    assert D[0, 1] == D[1, 0]
    assert D.symmetric


def test_analytic_coupled_metric_reproduces_rate():
    # M = [[w^2 + a^2 (y1^2 + s)^2, a (y1^2 + s)], [., 1]] with s = k + eta
    for a, w, s in [(1.0, 1.0, 0.5), (2.0, 3.0, 1.0)]:
        names = ("y1", "y2")
        c = {"a": a, "w": w, "s": s}
        m11 = parse_polynomial("w^2 + a^2*(y1^2 + s)^2", names, c)
        m12 = parse_polynomial("a*(y1^2 + s)", names, c)
        M = PolyMatrix([[m11, m12], [m12, Polynomial.constant(names, 1.0)]], symmetric=True)
        f = [parse_polynomial("y2", names), parse_polynomial("-a*(y1^2 + s)*y2 - w^2*y1", names, c)]
        R = rate_matrix(M, f)
        expect = PolyMatrix([[parse_polynomial("-2*a*w^2*y1^2 - 2*a*w^2*s", names, c), Polynomial.zero(names)],
                             [Polynomial.zero(names), Polynomial.zero(names)]], symmetric=True)
        assert matrices_close(R, expect, 1e-12)


# -- evaluate / parse / format -------------------------------------------------------

def test_evaluate_examples():
    assert P("x1^2 + x2").evaluate((2, 1)) == 5
    assert Polynomial.zero(X).evaluate((3.0, -1.0)) == 0
    assert P("-psi - 3/2*phi^2 - 1/2*phi^3", JET).evaluate((1, 0)) == -2


def test_evaluate_length_mismatch():
    with pytest.raises(ValueError):
        P("x1").evaluate((1.0,))


def test_compiled_matches_scalar():
    p = P("3*x1^3*x2 - x2^2 + 0.5")
    pts = np.array([[0.1, 0.2], [-1.5, 2.0], [0.0, 0.0]])
    assert np.allclose(p.compiled()(pts), [p.evaluate(q) for q in pts], rtol=1e-14)


def test_parse_exact_decimals():
    p = parse_polynomial("0.1*x1 + 0.2*x1", X, exact=True)
    assert p.coefficient((1, 0)) == Fraction(3, 10)


def test_parse_errors():
    with pytest.raises(PolySyntaxError) as e:
        P("x1 + * x2")
    assert e.value.column == 6
    with pytest.raises(UndeclaredSymbol) as e:
        P("x1 + x3")
    assert e.value.name == "x3"
    with pytest.raises(PolySyntaxError):
        P("x1^1.5")


@given(polys(max_deg=5, coef=st.floats(-1e3, 1e3, allow_nan=False)))
def test_format_parse_round_trip(p):
    assert parse_polynomial(format_polynomial(p), X) == p


def test_canonical_grlex_order():
    monos = monomials_upto(2, 2)
    assert monos == sorted(monos, key=lambda m: (sum(m), tuple(-e for e in m)))
    assert sorted(monos, key=grlex_key)[0] == (2, 0)


def test_polys_close():
    assert polys_close(P("x1 + 1"), P("x1 + 1.0000000001"), 1e-9)
    assert not polys_close(P("x1"), P("x2"), 1e-9)
