import random

import pytest

from germforge.coefficients import QQ
from germforge.errors import InputError, VariableMismatch
from germforge.experiments import random_polynomial
from germforge.liecalc import VectorField, exp_field
from germforge.series import TruncatedSeries
from germforge.unfolding import (
    FixedLocus,
    PolynomialFamily,
    UpDiffeo,
    compose_updiffeo,
    in_Df,
    in_Df_prime,
    invert_updiffeo,
    lambda_coefficient,
    specialize_lambda,
)

XY = ("x", "y")


def S(text, order=None, vars=XY):
    return TruncatedSeries.parse(text, vars, order)


def flow(f, order, vars=XY, t=1):
    return exp_field(VectorField.up(TruncatedSeries.parse(f, vars, order)), t)


def test_monomial_pair_locus():
    loc = FixedLocus.monomial_pair(2, 1)
    assert loc.multiplicity == 3
    assert loc.f == S("x^2*(x-y)")
    assert [fac.unipotent for fac in loc.factors] == [True, False]
    assert loc.reduced_product() == S("x*(x-y)")
    assert loc.excess_product() == S("x")


def test_cusp_unipotence_depends_on_power():
    assert not FixedLocus.cusp(1).factors[0].unipotent
    assert FixedLocus.cusp(2).factors[0].unipotent


def test_locus_rejects_bad_input():
    with pytest.raises(InputError):
        FixedLocus(XY, [("y", 1)])
    with pytest.raises(InputError):
        FixedLocus(XY, [("x - y^2 + 1", 1)])
    with pytest.raises(InputError):
        FixedLocus(XY, [("x", 1)], fibered="x")


def test_locus_json_round_trip_and_flag_check():
    loc = FixedLocus.monomial_pair(2, 1)
    data = loc.to_json()
    back = FixedLocus.from_json(data)
    assert back.f == loc.f
    data["factors"][0]["unipotent"] = False
    with pytest.raises(InputError):
        FixedLocus.from_json(data)


def test_updiffeo_validation():
    with pytest.raises(InputError):
        UpDiffeo(S("1 + x", 4))
    with pytest.raises(InputError):
        UpDiffeo(S("2*x", 4))


def test_compose_examples():
    one = ("x",)
    a = UpDiffeo(TruncatedSeries.parse("x + x^2", one))
    b = UpDiffeo(TruncatedSeries.parse("x - x^2", one))
    assert compose_updiffeo(a, UpDiffeo.identity(one)) == a
    # direct substitution: (x - x^2) + (x - x^2)^2
    assert compose_updiffeo(a, b).F == TruncatedSeries.parse("x - 2*x^3 + x^4", one)
    with pytest.raises(VariableMismatch):
        compose_updiffeo(a, UpDiffeo.identity(XY))


def test_flow_additivity_through_composition():
    f = "x*(x-y)"
    one = flow(f, 10)
    two = flow(f, 10, t=2)
    assert compose_updiffeo(one, one) == two


def test_inverse_examples():
    assert invert_updiffeo(UpDiffeo.identity(XY, 6)) == UpDiffeo.identity(XY, 6)
    inv = invert_updiffeo(UpDiffeo(TruncatedSeries.parse("x + x^2", ("x",), 6)))
    assert inv.F.truncate(3) == TruncatedSeries.parse("x - x^2 + 2*x^3", ("x",), 3)


def test_group_axioms_on_random_maps():
    rng = random.Random(5)
    maps = []
    for _ in range(3):
        p = random_polynomial(rng, XY, 3, order=8)
        F = S("x", 8) + (S("x*(x-y)", 8) * p).truncate(8)
        maps.append(UpDiffeo(F))
    a, b, c = maps
    assert compose_updiffeo(compose_updiffeo(a, b), c) == compose_updiffeo(a, compose_updiffeo(b, c))
    for m in maps:
        inv = invert_updiffeo(m)
        assert compose_updiffeo(m, inv) == UpDiffeo.identity(XY, 8)
        assert compose_updiffeo(inv, m) == UpDiffeo.identity(XY, 8)
        assert invert_updiffeo(inv) == m


def test_in_Df_examples():
    loc = FixedLocus.monomial_pair(1, 1)
    assert in_Df(flow("x*(x-y)", 10), loc)
    assert not in_Df(UpDiffeo.identity(XY, 10), loc)
    m = in_Df(UpDiffeo(S("x + x*(x-y)*(1+x)", 10)), loc)
    assert m and m.quotient == S("1 + x", m.quotient.order)
    # certificate reproduces F
    phi = flow("(1 + y)*x*(x-y)", 10)
    cert = in_Df(phi, loc)
    assert (cert.quotient * loc.f + S("x")).truncate(cert.order) == phi.F.truncate(cert.order)


def test_in_Df_prime_examples():
    loc = FixedLocus.monomial_pair(1, 1)
    base = flow("x*(x-y)", 10)
    assert in_Df_prime(base, loc)
    bad = UpDiffeo(base.F + S("x*(x-y)*x", 10))
    m = in_Df_prime(bad, loc)
    assert not m
    # the difference x^3 - x^2 y has degree 3, below the degree 4 of f^2
    assert sum(m.obstruction) == 3


def _family(order=10):
    loc = FixedLocus.monomial_pair(1, 1)
    base = flow("x*(x-y)", order)
    return PolynomialFamily(base, loc, S("1 + y - x^2", order))


def test_specialize_lambda_examples():
    fam = _family()
    assert specialize_lambda(fam, 0) == fam.base
    assert specialize_lambda(PolynomialFamily(fam.base, fam.locus, S("0", 10)), 1) == fam.base
    loc = FixedLocus(XY, [("x", 2)])
    base = flow("x^2", 10)
    fam2 = PolynomialFamily(base, loc, S("1", 10))
    assert specialize_lambda(fam2, QQ(1, 2)).F == base.F + S("x^4/2", 10)
    for lam in (QQ(1, 2), QQ(-3), QQ(7, 5)):
        assert in_Df_prime(specialize_lambda(fam, lam), fam.locus)


def test_family_rejects_base_outside_Df_prime():
    loc = FixedLocus.monomial_pair(1, 1)
    with pytest.raises(InputError):
        PolynomialFamily(flow("2*x*(x-y)", 8), loc, S("1", 8))


def test_lambda_series_specializes_consistently():
    fam = _family(8)
    F = fam.lambda_series(1).F
    assert lambda_coefficient(F, 0) == fam.base.F
    assert lambda_coefficient(F, 1) == fam.perturbation().truncate(8)
