"""Transport operators on normalized homological solutions and lambda-degree profiles.

Every homological solution here is taken against exp(f d/dx), so its
equation is d(alpha)/dx = (1 - 1/u)/f with u the generator unit of the map,
and alpha is normalized by alpha(0, params) = 0.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .coefficients import QQ, LambdaPoly
from .errors import InputError, NotDivisible, NotInDfPrime, StabilizationFailure
from .homological import root_test
from .liecalc import STABILIZATION_FACTOR, VectorField, apply_derivation, generator_unit
from .series import EXACT, TruncatedSeries
from .unfolding import (
    FixedLocus,
    PolynomialFamily,
    UpDiffeo,
    in_Df_prime,
    lambda_coefficient,
)

# -- helpers --------------------------------------------------------------------


def _require_prime(phi, locus):
    m = in_Df_prime(phi, locus)
    if not m:
        raise NotInDfPrime(f"map is not in D_f' (obstruction at {m.obstruction})")


def _normalized_antiderivative(rhs, x, shift=None):
    alpha = rhs.integrate(x)
    if shift is not None:
        alpha = alpha + shift.truncate(alpha.order)
    return alpha


def pole_free_rhs(u: TruncatedSeries, locus: FixedLocus) -> TruncatedSeries:
    """(1 - 1/u)/f, the right-hand side of the equation against exp(f d/dx)."""
    num = 1 - u.invert_unit()
    try:
        return num.divide_exact(locus.f)
    except NotDivisible as exc:
        raise NotInDfPrime(f"equation has a pole along f = 0 (obstruction at {exc.index})") from exc


def diagonal_difference(alpha: TruncatedSeries, vars=("x", "y")) -> TruncatedSeries:
    """alpha(y, y) - alpha(0, y) as a series in y."""
    x, y = vars
    line = (y,)
    yv = TruncatedSeries.variable(y, line)
    on_diag = alpha.restrict({x: yv, y: yv})
    on_axis = alpha.restrict({x: TruncatedSeries.zero(line), y: yv})
    return on_diag - on_axis


def t_extraction(alpha: TruncatedSeries, order=None, *, keep_complement=False):
    """x^j y^k z^l -> x^(j+l) y^(k+l), kept when k < j.

    With ``keep_complement`` also returns the discarded k >= j part, which is
    what a normalization change g(y, z) can touch.
    """
    x, y, z = alpha.vars
    N = alpha.order if order is None else min(order, alpha.order)
    kept, rest = {}, {}
    for (j, k, l), c in alpha.terms.items():
        e = (j + l, k + l)
        if sum(e) > N:
            continue
        bucket = kept if k < j else rest
        val = bucket.get(e, 0) + c
        if val:
            bucket[e] = val
        else:
            bucket.pop(e, None)
    plane = (x, y)
    out = TruncatedSeries(plane, N, kept)
    if keep_complement:
        return out, TruncatedSeries(plane, N, rest)
    return out


# -- values ---------------------------------------------------------------------


@dataclass
class TransportValue:
    """Output of S, T, L2 or L3 together with what produced it."""

    kind: str
    series: TruncatedSeries
    params: dict = field(default_factory=dict)
    complement: TruncatedSeries | None = None

    @property
    def order(self):
        return self.series.order

    def is_triangular(self):
        """Only x^j y^k with k < j (the T and L3 shape)."""
        return all(e[1] < e[0] for e in self.series.terms)

    def root_test(self, window, **kw):
        return root_test(self.series, window, component=self.kind, **kw)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["exponents", "coefficient"])
        for e, c in self.series.sorted_terms():
            w.writerow([" ".join(map(str, e)), str(c)])
        return buf.getvalue()

    def to_json(self):
        return {
            "type": "transport",
            "kind": self.kind,
            "params": {k: self.params[k] for k in sorted(self.params)},
            "value": self.series.to_json(),
        }


# -- derived equations ------------------------------------------------------------


def reduced_derived_rhs(phi0: UpDiffeo, delta: TruncatedSeries, locus: FixedLocus, *, check=True):
    """(dF0/dx)^(-1) * delta / u0^2."""
    if check:
        _require_prime(phi0, locus)
    u0 = generator_unit(phi0, locus)
    N = min(phi0.order - 1, u0.order, delta.order)
    slope = phi0.F.derivative(phi0.x).truncate(N)
    u0 = u0.truncate(N)
    return (delta.truncate(N) * (slope * u0 * u0).invert_unit()).truncate(N)


def family_unit(fam: PolynomialFamily, cap=1, order=None) -> TruncatedSeries:
    """u_lambda with log(phi_lambda) = u_lambda * f * d/dx, lambda kept to degree ``cap``."""
    phi = fam.lambda_series(cap)
    if order is not None:
        phi = phi.truncate(order)
    return generator_unit(phi, fam.locus)


def family_unit_terms(fam: PolynomialFamily):
    """(u0, u1) with u_lambda = u0 + f * u1 * lambda + O(lambda^2)."""
    u = family_unit(fam, 1)
    u0 = lambda_coefficient(u, 0)
    u1 = lambda_coefficient(u, 1).divide_exact(fam.locus.f)
    return u0, u1


def derived_rhs(fam: PolynomialFamily) -> TruncatedSeries:
    """d/dlambda at 0 of the family's right-hand side, equal to u1/u0^2."""
    u0, u1 = family_unit_terms(fam)
    N = u1.order
    u0 = u0.truncate(N)
    return (u1 * (u0 * u0).invert_unit()).truncate(N)


def diffsim_witness(fam: PolynomialFamily, *, check=True) -> TruncatedSeries:
    """sum_{j>=1} X0^(j-1)(u1 f/u0) / (j+1)!, X0 = log(phi0).

    Its x-derivative is reduced_derived_rhs - derived_rhs, and it lies in (f);
    with ``check`` both facts are asserted at the computed order.
    """
    loc = fam.locus
    u0, u1 = family_unit_terms(fam)
    N = u1.order
    u0 = u0.truncate(N)
    X0 = VectorField.up((u0 * loc.f).truncate(N))
    g = (u1 * loc.f * u0.invert_unit()).truncate(N)
    total = g * QQ(1, 2)
    term = g
    cap = STABILIZATION_FACTOR * max(int(N), 1)
    j = 1
    while True:
        term = apply_derivation(X0, term).truncate(N)
        j += 1
        if term.is_zero():
            break
        if j > cap:
            raise StabilizationFailure("witness series did not stabilize")
        total = total + term * QQ(1, math.factorial(j + 1))
    if check:
        try:
            total.divide_exact(loc.f)
        except NotDivisible as exc:
            raise AssertionError(f"witness is not divisible by f at {exc.index}") from exc
        diff = reduced_derived_rhs(fam.base, fam.delta, loc, check=False) - derived_rhs(fam)
        M = min(diff.order, total.order - 1)
        if total.derivative(loc.x).truncate(M) != diff.truncate(M):
            raise AssertionError("witness derivative does not match reduced - derived")
    return total


# -- S and T -----------------------------------------------------------------------


def _pair_locus(a, b):
    if a < 1 or b < 1:
        raise InputError("S_ab needs a, b >= 1")
    return FixedLocus.monomial_pair(a, b)


def _cusp_locus(c):
    if c < 1:
        raise InputError("T_c needs c >= 1")
    return FixedLocus.cusp(c)


def _homological_alpha(phi, locus, order, shift, check):
    if phi.vars != locus.vars:
        raise InputError(f"map must use variables {locus.vars}")
    if order is not None and order + 2 * locus.multiplicity < phi.order:
        phi = phi.truncate(order + 2 * locus.multiplicity)
    if check:
        _require_prime(phi, locus)
    rhs = pole_free_rhs(generator_unit(phi, locus), locus)
    alpha = _normalized_antiderivative(rhs, locus.x, shift)
    if order is not None:
        alpha = alpha.truncate(order)
    return alpha


def S_ab(phi: UpDiffeo, a: int, b: int, order=None, *, shift=None, check=True) -> TransportValue:
    """alpha(y, y) - alpha(0, y) for f = x^a (x - y)^b.

    ``shift`` adds a series to alpha before restricting; the value must not
    change, which is how well-definedness is tested.
    """
    loc = _pair_locus(a, b)
    alpha = _homological_alpha(phi, loc, order, shift, check)
    return TransportValue("S", diagonal_difference(alpha, loc.vars), {"a": a, "b": b})


def S_ab_phi0(phi0: UpDiffeo, delta: TruncatedSeries, a: int, b: int, order=None, *, check=True) -> TransportValue:
    """S of the reduced derived equation: linear in delta."""
    loc = _pair_locus(a, b)
    rhs = reduced_derived_rhs(phi0, delta, loc, check=check)
    alpha = rhs.integrate(loc.x)
    if order is not None:
        alpha = alpha.truncate(order)
    return TransportValue("S_phi0", diagonal_difference(alpha, loc.vars), {"a": a, "b": b})


def T_c(phi: UpDiffeo, c: int, order=None, *, shift=None, check=True, keep_complement=False) -> TransportValue:
    """k < j part of alpha(x, y, x y) for f = (z - x y)^c."""
    loc = _cusp_locus(c)
    alpha = _homological_alpha(phi, loc, order, shift, check)
    return _t_value("T", alpha, {"c": c}, keep_complement)


def T_c_phi0(phi0: UpDiffeo, delta: TruncatedSeries, c: int, order=None, *, check=True, keep_complement=False) -> TransportValue:
    loc = _cusp_locus(c)
    rhs = reduced_derived_rhs(phi0, delta, loc, check=check)
    alpha = rhs.integrate(loc.x)
    if order is not None:
        alpha = alpha.truncate(order)
    return _t_value("T_phi0", alpha, {"c": c}, keep_complement)


def _t_value(kind, alpha, params, keep_complement):
    if keep_complement:
        kept, rest = t_extraction(alpha, keep_complement=True)
        return TransportValue(kind, kept, params, rest)
    return TransportValue(kind, t_extraction(alpha), params)


def L2(v: TruncatedSeries, g: TruncatedSeries, order=None) -> TransportValue:
    """alpha(y, y) - alpha(0, y) with d(alpha)/dx = v g, alpha(0, y) = 0."""
    if v.nvars != 2:
        raise InputError("L2 takes series in two variables (x, y)")
    alpha = (v * g).integrate(v.vars[0])
    if order is not None:
        alpha = alpha.truncate(order)
    return TransportValue("L2", diagonal_difference(alpha, v.vars))


def L3(v: TruncatedSeries, g: TruncatedSeries, order=None) -> TransportValue:
    """k < j extraction of the x-antiderivative of v g in (x, y, z)."""
    if v.nvars != 3:
        raise InputError("L3 takes series in three variables (x, y, z)")
    alpha = (v * g).integrate(v.vars[0])
    if order is not None:
        alpha = alpha.truncate(order)
    return TransportValue("L3", t_extraction(alpha))


# -- lambda-degree profiles -----------------------------------------------------------


@dataclass
class LambdaProfile:
    """Per-monomial lambda-polynomials with their declared degree bounds.

    ``rhs`` holds the coefficients d_j of (1 - 1/u_lambda)/f, bounded by
    |j| + nu(f); ``unit`` holds the coefficients a_j of u_lambda, bounded by |j|.
    """

    rhs: dict
    unit: dict
    nu: int
    order: int
    lambda_cap: int

    def rhs_bound(self, e):
        return sum(e) + self.nu

    @staticmethod
    def unit_bound(e):
        return sum(e)

    def violations(self):
        bad = []
        for e, p in self.rhs.items():
            if len(p) - 1 > self.rhs_bound(e):
                bad.append(("rhs", e, len(p) - 1, self.rhs_bound(e)))
        for e, p in self.unit.items():
            if len(p) - 1 > self.unit_bound(e):
                bad.append(("unit", e, len(p) - 1, self.unit_bound(e)))
        return sorted(bad)

    @property
    def passes(self):
        return not self.violations()

    def to_json(self):
        def table(d, bound):
            return [
                {"monomial": list(e), "lambda_coeffs": [str(c) for c in d[e]], "bound": bound(e)}
                for e in sorted(d)
            ]

        return {
            "type": "lambda_profile",
            "nu": self.nu,
            "order": self.order,
            "lambda_cap": self.lambda_cap,
            "passes": self.passes,
            "rhs": table(self.rhs, self.rhs_bound),
            "unit": table(self.unit, self.unit_bound),
        }


def _coeff_lists(series, top):
    out = {}
    for e, c in series.terms.items():
        if sum(e) <= top:
            coeffs = list(c.coeffs) if isinstance(c, LambdaPoly) else [c]
            if coeffs:
                out[e] = coeffs
    return out


def lambda_profile(fam: PolynomialFamily, order: int, lambda_cap=None) -> LambdaProfile:
    """lambda-degrees of the family's right-hand side and generator unit up to ``order``.

    The cap defaults to order + nu(f) + 1, one more than the largest degree
    the bound allows, so a violation would be visible.
    """
    nu = fam.locus.multiplicity
    cap = order + nu + 1 if lambda_cap is None else lambda_cap
    if cap < order + nu:
        raise InputError("lambda cap is too small to observe the degree bounds")
    need = order + 2 * nu
    if fam.base.order != EXACT and fam.base.order < need:
        raise InputError(f"the family must be known to order {need}")
    u = family_unit(fam, cap, need)
    rhs = (1 - u.invert_unit()).divide_exact(fam.locus.f)
    return LambdaProfile(_coeff_lists(rhs, order), _coeff_lists(u, order), nu, order, cap)


def verify_profile(profile: LambdaProfile) -> bool:
    return profile.passes
