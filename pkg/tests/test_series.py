import math

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from germforge.coefficients import QQ, Gaussian, LambdaPoly, float_to_hex, hex_to_float
from germforge.errors import NotAUnit, NotDivisible, VariableMismatch
from germforge.series import (
    EXACT,
    MeromorphicSeries,
    TruncatedSeries,
    add,
    compose,
    d_dx,
    divide_exact,
    integrate_x,
    invert_unit,
    l1_norm_truncated,
    mul,
    restrict,
)

XY = ("x", "y")


def S(text, order=None, vars=XY):
    return TruncatedSeries.parse(text, vars, order)


def canonical(s):
    return all(c for c in s.terms.values()) and (
        s.order == EXACT or all(sum(e) <= s.order for e in s.terms)
    )


# -- random series for properties ------------------------------------------------

small_q = st.builds(QQ, st.integers(-6, 6), st.integers(1, 4))


@st.composite
def series(draw, order=6, vars=XY, max_terms=8):
    n = len(vars)
    exps = st.tuples(*[st.integers(0, order) for _ in range(n)]).filter(lambda e: sum(e) <= order)
    terms = draw(st.dictionaries(exps, small_q, max_size=max_terms))
    return TruncatedSeries(vars, order, terms)


# -- coefficients -----------------------------------------------------------------


def test_gaussian_collapses_to_rational():
    z = Gaussian(1, 2) * Gaussian(1, -2)
    assert z == 5 and not isinstance(z, Gaussian)
    assert Gaussian(1, 1) / Gaussian(1, 1) == 1
    assert (1 / Gaussian(0, 1)) == Gaussian(0, -1)


def test_lambda_poly_inverse_and_cap():
    p = LambdaPoly((QQ(1), QQ(1)), 4)
    inv = p.inverse()
    assert inv.coeffs == (1, -1, 1, -1, 1)
    assert (p * inv) == 1
    assert p.derivative().cap == 3


def test_hex_floats_round_trip():
    with mpmath.workprec(300):
        v = mpmath.mpf(1) / 3
        assert hex_to_float(float_to_hex(v), 300) == v
    assert float_to_hex(mpmath.mpf(0)) == "0x0p0"


# -- add / mul --------------------------------------------------------------------


def test_add_examples():
    assert add(S("x"), S("-x")).is_zero()
    assert add(S("x + y^2"), S("y^2")) == S("x + 2*y^2")


def test_add_variable_mismatch():
    with pytest.raises(VariableMismatch):
        S("x") + TruncatedSeries.parse("x", ("x", "z"))


def test_mul_examples():
    assert mul(S("1+x", 4), S("1-x", 4)) == S("1 - x^2", 4)
    assert mul(S("x", 1), S("y", 1)).is_zero()
    geo = sum((S(f"x^{k}") for k in range(7)), TruncatedSeries.zero(XY)).truncate(6)
    prod = mul(geo, S("1-x", 6))
    assert prod.terms == {(0, 0): 1} and prod.order == 6


def test_order_is_min_of_operands():
    assert (S("x", 3) * S("y", 5)).order == 3
    assert (S("x", 3) + S("y")).order == 3


@settings(max_examples=40, deadline=None)
@given(series(), series(), series())
def test_ring_axioms(a, b, c):
    assert a + b == b + a
    assert a * b == b * a
    assert (a * b) * c == a * (b * c)
    assert a * (b + c) == a * b + a * c
    for s in (a + b, a * b):
        assert canonical(s)


# -- units and division ----------------------------------------------------------


def test_invert_unit_examples():
    assert invert_unit(S("1", 5)) == S("1", 5)
    inv = invert_unit(S("1-x", 8))
    assert inv.terms == {(k, 0): 1 for k in range(9)}
    with pytest.raises(NotAUnit):
        invert_unit(S("x", 4))


@settings(max_examples=30, deadline=None)
@given(series(order=8))
def test_invert_unit_two_sided(f):
    f = f - f.constant_term()
    u = 1 + f
    inv = invert_unit(u)
    assert u * inv == TruncatedSeries.constant(QQ(1), XY, 8)
    assert inv * u == TruncatedSeries.constant(QQ(1), XY, 8)


def test_divide_exact_examples():
    assert divide_exact(S("x^2 - x*y", 6), S("x")) == S("x - y", 5)
    with pytest.raises(NotDivisible) as err:
        divide_exact(S("x", 4), S("y"))
    assert err.value.index == (1, 0)


@settings(max_examples=30, deadline=None)
@given(series(order=8), series(order=3, max_terms=4))
def test_divide_exact_round_trip(q, g):
    g = g + S("x^2")  # nonzero lowest term in x
    g = g.truncate(8)
    prod = q * g
    back = divide_exact(prod, g)
    N = back.order
    assert back == q.truncate(N)
    assert (back * g).truncate(N) == prod.truncate(N)


def test_local_divmod_reconstructs():
    b = S("1 + x + y + x*y^2 + x^3", 6)
    D = S("x - y")
    q, r = b.local_divmod(D)
    assert (q * D + r).truncate(q.order) == b.truncate(q.order)


# -- composition, calculus --------------------------------------------------------


def test_compose_examples():
    assert compose(S("x^2"), {"x": S("x + y")}) == S("x^2 + 2*x*y + y^2")
    exps = TruncatedSeries(("x",), 8, {(k,): QQ(1, math.factorial(k)) for k in range(9)})
    doubled = compose(exps, {"x": TruncatedSeries.parse("2*x", ("x",))})
    assert all(doubled.coefficient((k,)) == QQ(2**k, math.factorial(k)) for k in range(9))


def test_compose_blowup_chart_of_the_cusp():
    xyz = ("x", "y", "z")
    xst = ("x", "s", "t")
    for c in (1, 2, 3):
        f = TruncatedSeries.parse(f"(z - x*y)^{c}", xyz)
        chart = {
            "x": TruncatedSeries.variable("x", xst),
            "y": TruncatedSeries.variable("s", xst),
            "z": TruncatedSeries.parse("s*t", xst),
        }
        assert compose(f, chart) == TruncatedSeries.parse(f"s^{c}*(t - x)^{c}", xst)


def test_compose_rejects_constant_terms():
    with pytest.raises(ValueError):
        compose(S("x^2", 4), {"x": S("1 + x")})


@settings(max_examples=25, deadline=None)
@given(series(order=5), series(order=5))
def test_compose_respects_products(a, b):
    s = {"x": S("x + y^2 - x*y", 5), "y": S("y + x^2", 5)}
    assert compose(a * b, s) == compose(a, s) * compose(b, s)


def test_compose_with_inverse_is_identity():
    from germforge.unfolding import UpDiffeo, invert_updiffeo

    phi = UpDiffeo(TruncatedSeries.parse("x + x^2", ("x",), 10))
    inv = invert_updiffeo(phi)
    catalan = [1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862]
    assert [inv.F.coefficient((k + 1,)) * (-1) ** k for k in range(10)] == catalan
    assert phi.F.compose({"x": inv.F}) == TruncatedSeries.variable("x", ("x",), 10)


def test_derivative_and_integral_examples():
    assert d_dx(S("x^3*y", 6), "x") == S("3*x^2*y", 5)
    assert d_dx(S("7", 4), "x").is_zero()
    assert d_dx(S("7", 4), "x").order == 3
    assert integrate_x(S("y", 4)) == S("x*y", 5)
    assert integrate_x(S("0", 4)).is_zero()
    g = (1 + S("x*(x-y)", 3)).invert_unit()
    assert integrate_x(g).truncate(3) == S("x - x^3/3 + x^2*y/2", 3)


@settings(max_examples=30, deadline=None)
@given(series(order=7))
def test_calculus_round_trips(g):
    assert d_dx(integrate_x(g), "x") == g
    at_zero = g._like({e: c for e, c in g.terms.items() if e[0] == 0})
    assert integrate_x(d_dx(g, "x")) == (g - at_zero).truncate(g.order)


# -- restriction, norms, parsing, JSON ---------------------------------------------


def test_restrict_examples():
    t = TruncatedSeries.variable("t", ("t",))
    assert restrict(S("x - y"), {"x": t, "y": t}).is_zero()
    plane = ("x", "y")
    cusp = TruncatedSeries.parse("z - x*y", ("x", "y", "z"))
    on_surface = {
        "x": TruncatedSeries.variable("x", plane),
        "y": TruncatedSeries.variable("y", plane),
        "z": TruncatedSeries.parse("x*y", plane),
    }
    assert restrict(cusp, on_surface).is_zero()
    with pytest.raises(VariableMismatch):
        restrict(S("x - y"), {"x": t})


def test_l1_norms():
    assert l1_norm_truncated(S("1 + x/2")) == mpmath.mpf(1.5)
    assert l1_norm_truncated(S("0")) == 0
    N = 10
    geo = TruncatedSeries(("x",), N, {(k,): QQ(1, 2**k) for k in range(N + 1)})
    with mpmath.workprec(256):
        assert l1_norm_truncated(geo) == 2 - mpmath.mpf(2) ** (-N)


def test_parse_gaussian_and_powers():
    s = S("(1 + I*x)^2", 3)
    assert s.coefficient((1, 0)) == Gaussian(0, 2)
    assert s.coefficient((2, 0)) == -1
    assert S("1/(1-x)", 3) == TruncatedSeries(XY, 3, {(k, 0): QQ(1) for k in range(4)})


def test_json_round_trip_exact_and_bigfloat():
    s = S("3/2*x^2*y + I*y - 1", 5)
    assert TruncatedSeries.from_json(s.to_json()) == s
    data = s.to_json()
    assert data["terms"][0] == {"e": [0, 0], "re": "-1", "im": "0"}
    b = S("1/3 + x/7", 4).to_bigfloat(128)
    back = TruncatedSeries.from_json(b.to_json())
    assert back.mode == "bigfloat" and back.terms == b.terms


def test_meromorphic_equality_by_cross_multiplication():
    f = S("x^2", 8)
    a = MeromorphicSeries(S("x^3 + x^2*y", 8), [(f, 1)])
    b = MeromorphicSeries(S("x + y", 8), [])
    assert a == b
    assert a.to_series().truncate(5) == S("x + y", 5)
