import math
import random

import pytest

from germforge.coefficients import QQ, LambdaPoly
from germforge.errors import InputError, NotInDfPrime
from germforge.experiments import named_locus, random_family, random_polynomial
from germforge.homological import GROWING
from germforge.liecalc import VectorField, exp_field
from germforge.operators import (
    L2,
    L3,
    S_ab,
    S_ab_phi0,
    T_c,
    T_c_phi0,
    derived_rhs,
    diffsim_witness,
    family_unit_terms,
    lambda_profile,
    reduced_derived_rhs,
    t_extraction,
)
from germforge.series import TruncatedSeries
from germforge.unfolding import (
    FixedLocus,
    PolynomialFamily,
    UpDiffeo,
    lambda_coefficient,
    specialize_lambda,
)

XY = ("x", "y")
XYZ = ("x", "y", "z")


def S(text, order=None, vars=XY):
    return TruncatedSeries.parse(text, vars, order)


def flow(unit, locus, order):
    u = TruncatedSeries.parse(unit, locus.vars, order)
    return exp_field(VectorField.up((u * locus.f).truncate(order)))


def lagrange_slope_at_zero(points):
    """d/dlambda at 0 of the interpolating polynomial through (lambda_i, value_i)."""
    xs = [p for p, _ in points]
    total = 0
    for i, (xi, yi) in enumerate(points):
        others = [xj for j, xj in enumerate(xs) if j != i]
        denom = math.prod(xi - xj for xj in others)
        # derivative at 0 of prod (lam - xj)
        slope = sum(math.prod(-xk for xk in others if xk != xj) for xj in others)
        total = total + yi * QQ(slope) / denom
    return total


# -- reduced derived rhs ----------------------------------------------------------


def test_reduced_rhs_of_zero_delta_vanishes():
    locus = named_locus("x^2(x-y)")
    assert reduced_derived_rhs(flow("1", locus, 10), S("0", 10), locus).is_zero()


def test_reduced_rhs_against_the_closed_form_flow():
    locus = named_locus("x^2")
    phi0 = flow("1", locus, 12)
    # x o exp(x^2 d/dx) = x/(1-x), whose x-derivative is 1/(1-x)^2
    rhs = reduced_derived_rhs(phi0, S("1", 12), locus)
    assert rhs == S("(1-x)^2", rhs.order)


def test_reduced_rhs_is_linear():
    locus = named_locus("x(x-y)")
    phi0 = flow("1 + x*(x-y)*y", locus, 10)
    rng = random.Random(3)
    d1 = random_polynomial(rng, XY, 3, order=10)
    d2 = random_polynomial(rng, XY, 3, order=10)
    lhs = reduced_derived_rhs(phi0, d1 + d2, locus)
    assert lhs == reduced_derived_rhs(phi0, d1, locus) + reduced_derived_rhs(phi0, d2, locus)


def test_reduced_rhs_requires_Df_prime():
    locus = named_locus("x(x-y)")
    with pytest.raises(NotInDfPrime):
        reduced_derived_rhs(UpDiffeo(S("x + x*(x-y)*x", 8)), S("1", 8), locus)


# -- derived rhs and the witness ----------------------------------------------------


def _family(name, seed, order=12):
    return random_family(random.Random(seed), named_locus(name), order)


def test_zero_delta_gives_zero_derived_rhs_and_witness():
    locus = named_locus("x(x-y)")
    fam = PolynomialFamily(flow("1 + x*(x-y)", locus, 10), locus, S("0", 10))
    assert derived_rhs(fam).is_zero()
    assert diffsim_witness(fam).is_zero()


@pytest.mark.parametrize("name", ["x^2", "x(x-y)", "x^2(x-y)"])
def test_witness_is_divisible_by_f_and_integrates_the_difference(name):
    for seed in range(3):
        fam = _family(name, seed)
        witness = diffsim_witness(fam)
        quotient = witness.divide_exact(fam.locus.f)
        assert quotient.order >= 0
        diff = reduced_derived_rhs(fam.base, fam.delta, fam.locus) - derived_rhs(fam)
        antiderivative = diff.integrate("x")
        N = min(antiderivative.order, witness.order)
        assert antiderivative.truncate(N) == witness.truncate(N)


def test_witness_leading_part_is_its_first_term():
    fam = _family("x^2(x-y)", 4)
    u0, u1 = family_unit_terms(fam)
    first = (u1 * fam.locus.f * u0.invert_unit()).truncate(u1.order) * QQ(1, 2)
    witness = diffsim_witness(fam)
    low = first.valuation()
    assert witness.valuation() == low
    assert witness.homogeneous_parts(low)[low] == first.homogeneous_parts(low)[low]


# -- S values -----------------------------------------------------------------------


@pytest.mark.parametrize("a,b", [(1, 1), (2, 1), (1, 2), (3, 3)])
def test_S_vanishes_on_the_model_flow(a, b):
    locus = FixedLocus.monomial_pair(a, b)
    phi = flow("1", locus, 8 + 2 * locus.multiplicity)
    assert S_ab(phi, a, b, 8).series.is_zero()


def test_S_of_unit_one_plus_f():
    locus = named_locus("x(x-y)")
    phi = flow("1 + x*(x-y)", locus, 14)
    value = S_ab(phi, 1, 1, 10).series
    assert value.constant_term() == 0
    assert value.truncate(3) == TruncatedSeries.parse("y + y^3/6", ("y",), 3)


def test_S_ignores_functions_of_y_added_to_alpha():
    locus = named_locus("x(x-y)")
    phi = flow("1 + x*(x-y)*(1 - y)", locus, 14)
    base = S_ab(phi, 1, 1, 10).series
    shifted = S_ab(phi, 1, 1, 10, shift=S("3*y + y^2 - 7*y^5", 10)).series
    assert base == shifted


def test_S_rejects_bad_indices():
    locus = named_locus("x(x-y)")
    with pytest.raises(InputError):
        S_ab(flow("1", locus, 8), 0, 1, 6)


def _slope_of_family_value(fam, value_at, npoints):
    lams = [QQ(k, 3) for k in range(-(npoints // 2), npoints - npoints // 2)]
    points = [(lam, value_at(specialize_lambda(fam, lam))) for lam in lams]
    return lagrange_slope_at_zero(points)


@pytest.mark.parametrize("a,b", [(1, 1), (2, 1)])
def test_S_lambda_derivative_identity(a, b):
    locus = FixedLocus.monomial_pair(a, b)
    nu = locus.multiplicity
    order = 8
    rng = random.Random(a * 10 + b)
    for _ in range(2):
        delta = random_polynomial(rng, XY, 2, order=order + 2 * nu)
        N = order + 2 * nu
        base = exp_field(VectorField.up(((1 + locus.f * S("y")) * locus.f).truncate(N)))
        fam = PolynomialFamily(base, locus, delta)
        expected = S_ab_phi0(base, delta, a, b, order).series
        # route 1: lambda kept symbolic to first order
        symbolic = S_ab(fam.lambda_series(1), a, b, order, check=False).series
        assert lambda_coefficient(symbolic, 1) == expected
        # route 2: exact values at rational lambda, interpolated; the value at
        # degree d is a polynomial in lambda of degree at most d + 1 + nu
        interp = _slope_of_family_value(fam, lambda phi: S_ab(phi, a, b, order).series, order + nu + 2)
        assert interp == expected


def test_S_phi0_of_zero_delta():
    locus = named_locus("x(x-y)")
    assert S_ab_phi0(flow("1", locus, 12), S("0", 12), 1, 1, 8).series.is_zero()


def test_S_phi0_is_L2_of_the_reduced_factor():
    locus = named_locus("x^2(x-y)")
    phi0 = flow("1 + x^2*(x-y)*(2 - y)", locus, 14)
    delta = S("1 + x - 3*y^2", 14)
    v = reduced_derived_rhs(phi0, S("1", 14), locus)
    assert S_ab_phi0(phi0, delta, 2, 1, 8).series == L2(v, delta, 8).series


# -- T values ---------------------------------------------------------------------------


def test_T_vanishes_on_the_model_flow_and_is_triangular():
    locus = named_locus("cusp:1")
    assert T_c(flow("1", locus, 10), 1, 8).series.is_zero()
    value = T_c(flow("1 + (z - x*y)*(1 + y)", locus, 12), 1, 8)
    assert value.is_triangular()
    assert not value.series.is_zero()


def test_T_changes_only_the_complement_under_normalization():
    locus = named_locus("cusp:1")
    phi = flow("1 + (z - x*y)*(1 - x)", locus, 12)
    g = TruncatedSeries.parse("y + z^2 - 3*y*z + y^4", XYZ, 8)
    plain = T_c(phi, 1, 8, keep_complement=True)
    moved = T_c(phi, 1, 8, shift=g, keep_complement=True)
    assert plain.series == moved.series
    assert plain.complement != moved.complement


def test_t_extraction_index_rule():
    alpha = TruncatedSeries.parse("x*z^2 + y*z", XYZ)
    out = t_extraction(alpha, 8)
    # x^1 y^0 z^2 goes to x^3 y^2; y z goes to x y^2 and is dropped (k >= j)
    assert out == S("x^3*y^2", 8)


def test_T_lambda_derivative_identity():
    locus = named_locus("cusp:1")
    nu = locus.multiplicity
    order = 6
    base = flow("1 + (z - x*y)*x", locus, order + 2 * nu)
    delta = TruncatedSeries.parse("1 - y + 2*x*z", XYZ, order + 2 * nu)
    fam = PolynomialFamily(base, locus, delta)
    expected = T_c_phi0(base, delta, 1, order).series
    symbolic = T_c(fam.lambda_series(1), 1, order, check=False).series
    assert lambda_coefficient(symbolic, 1) == expected
    interp = _slope_of_family_value(fam, lambda phi: T_c(phi, 1, order).series, order + nu + 2)
    assert interp == expected


# -- linear operators ---------------------------------------------------------------------


def test_L2_examples():
    zero = S("0", 10)
    assert L2(zero, S("1"), 10).series.is_zero()
    assert L2(S("1", 10), S("1"), 10).series == TruncatedSeries.parse("y", ("y",), 10)


def test_L2_of_factorial_series_grows():
    order = 27
    v = TruncatedSeries(XY, order, {(k, 0): QQ(math.factorial(k)) for k in range(order + 1)})
    out = L2(v, S("1"), order).series
    for k in range(order):
        assert out.coefficient((k + 1,)) == QQ(math.factorial(k), k + 1)
    assert out.constant_term() == 0
    assert L2(v, S("1"), order).root_test(25).verdict == GROWING


def test_L3_examples():
    assert L3(TruncatedSeries.zero(XYZ, 8), TruncatedSeries.parse("1", XYZ), 8).series.is_zero()
    one = TruncatedSeries.parse("1", XYZ, 8)
    assert L3(one, one, 8).series == S("x", 8)
    v = TruncatedSeries.parse("z^2", XYZ, 8)
    assert L3(v, one, 8).series == S("x^3*y^2", 8)


def test_L_operators_check_dimension():
    with pytest.raises(InputError):
        L2(TruncatedSeries.parse("1", XYZ, 4), TruncatedSeries.parse("1", XYZ), 4)
    with pytest.raises(InputError):
        L3(S("1", 4), S("1"), 4)


# -- lambda profiles -----------------------------------------------------------------------


def test_zero_delta_profile_has_constant_lambda_coefficients():
    locus = named_locus("x^2")
    fam = PolynomialFamily(flow("1 + x^2", locus, 12), locus, S("0", 12))
    prof = lambda_profile(fam, 8)
    assert prof.passes
    assert all(len(p) <= 1 for p in list(prof.rhs.values()) + list(prof.unit.values()))


def test_profile_of_model_flow_passes_and_control_fails():
    locus = named_locus("x^2")
    fam = PolynomialFamily(flow("1", locus, 12), locus, S("1", 12))
    prof = lambda_profile(fam, 8)
    assert prof.passes
    assert any(len(p) > 1 for p in prof.unit.values())
    e = max(prof.unit, key=sum)
    prof.unit[e] = prof.unit[e] + [QQ(0)] * (prof.unit_bound(e) + 1 - len(prof.unit[e])) + [QQ(1)]
    assert not prof.passes
    assert prof.violations()[0][:2] == ("unit", e)


@pytest.mark.parametrize("name", ["x(x-y)", "x^2(x-y)"])
def test_profile_bounds_on_random_families(name):
    fam = _family(name, 7, order=14)
    prof = lambda_profile(fam, 8)
    assert prof.passes, prof.violations()


def test_profile_refuses_short_input():
    locus = named_locus("x^2")
    fam = PolynomialFamily(flow("1", locus, 10), locus, S("1", 10))
    with pytest.raises(InputError):
        lambda_profile(fam, 8)
    fam = PolynomialFamily(flow("1", locus, 12), locus, S("1", 12))
    with pytest.raises(InputError):
        lambda_profile(fam, 8, lambda_cap=5)


def test_lambda_poly_degree_reflects_trailing_zeros():
    assert len(LambdaPoly((QQ(1), QQ(0)), 4).coeffs) == 1
