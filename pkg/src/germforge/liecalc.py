"""Lie series, infinitesimal generators and the path-method conjugation.

``exp_field`` sums the Lie series sum_j t^j X^j(x) / j! directly.
``log_updiffeo`` goes the other way by undetermined coefficients: in each
total degree d the unknown homogeneous part a_d of the generator enters the
degree-d part of exp(X)(x) through the nilpotent operator D = a_1 d/dx only,
so it is recovered exactly by the Bernoulli series D / (e^D - 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .coefficients import QQ, Gaussian, LambdaPoly, real_imag
from .errors import (
    GermforgeError,
    InputError,
    NotDivisible,
    NotInDf,
    PathThroughSingularity,
    StabilizationFailure,
    VariableMismatch,
)
from .series import EXACT, TruncatedSeries, add_into, exponent_adder, multiply_terms
from .unfolding import FixedLocus, UpDiffeo, compose_updiffeo, lift_lambda

STABILIZATION_FACTOR = 4


class ConjugacyFailure(GermforgeError, AssertionError):
    pass


class VectorField:
    """Derivation sum_v components[v] * d/dv; missing components are zero."""

    def __init__(self, components, vars=None, *, singular=True):
        comps = {v: s for v, s in components.items() if not s.is_zero()}
        if vars is None:
            listed = {s.vars for s in components.values()}
            if len(listed) != 1:
                raise VariableMismatch("components must share one variable list")
            vars = listed.pop()
        self.vars = tuple(vars)
        for v, s in comps.items():
            if v not in self.vars or s.vars != self.vars:
                raise VariableMismatch(f"component {v!r} does not live on {self.vars}")
            if singular and s.constant_term():
                raise InputError(f"component {v!r} does not vanish at the origin")
        self.components = comps

    @classmethod
    def up(cls, a: TruncatedSeries):
        """a * d/dx with x the first variable."""
        return cls({a.vars[0]: a}, a.vars)

    @property
    def x(self):
        return self.vars[0]

    @property
    def x_component(self) -> TruncatedSeries:
        return self.components.get(self.x, TruncatedSeries.zero(self.vars))

    def is_up(self):
        return set(self.components) <= {self.x}

    @property
    def order(self):
        return min((s.order for s in self.components.values()), default=EXACT)

    def scaled(self, t):
        return VectorField({v: s * t for v, s in self.components.items()}, self.vars)

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        if self.vars != other.vars:
            return False
        zero = TruncatedSeries.zero(self.vars)
        return all(
            self.components.get(v, zero) == other.components.get(v, zero)
            for v in set(self.components) | set(other.components)
        )

    __hash__ = None

    def to_json(self):
        return {"type": "field", "components": {v: s.to_json() for v, s in self.components.items()}}

    @classmethod
    def from_json(cls, data):
        if data.get("type") != "field":
            raise InputError("expected a JSON object of type 'field'")
        comps = {v: TruncatedSeries.from_json(s) for v, s in data["components"].items()}
        if not comps:
            raise InputError("a field needs at least one component")
        return cls(comps)

    def __repr__(self):
        inner = " + ".join(f"({s}) d/d{v}" for v, s in self.components.items()) or "0"
        return f"VectorField({inner})"


def apply_derivation(X: VectorField, g: TruncatedSeries) -> TruncatedSeries:
    """X(g). Components vanish at 0, so no precision is lost."""
    if g.vars != X.vars:
        raise VariableMismatch("field and series use different variables")
    order = g.order
    for s in X.components.values():
        order = min(order, s.order if not s.constant_term() else g.order - 1)
    out = {}
    for v, s in X.components.items():
        dg = g.derivative(v)
        add_into(out, multiply_terms(s.terms, dg.terms, order, g.nvars))
    return TruncatedSeries._raw(g.vars, order, out, g.mode, g.precision)


def _factorial_inverse(j):
    return QQ(1, math.factorial(j))


def lie_series(X: VectorField, g: TruncatedSeries, t=1, order=None, cap=None):
    """sum_j t^j X^j(g) / j!, summed until X^j(g) vanishes within the truncation."""
    N = min(X.order, g.order) if order is None else order
    if N == EXACT:
        raise ValueError("a finite truncation order is needed to exponentiate")
    g = g.truncate(N)
    cap = STABILIZATION_FACTOR * max(int(N), 1) if cap is None else cap
    total = g
    h = g
    tj = QQ(1)
    for j in range(1, cap + 1):
        h = apply_derivation(X, h).truncate(N)
        if h.is_zero():
            return TruncatedSeries._raw(total.vars, N, total.terms, total.mode, total.precision)
        tj = tj * t
        total = total + h * (tj * _factorial_inverse(j))
    raise StabilizationFailure(
        f"Lie series did not stabilize after {cap} terms; lowest live degree {h.valuation()}"
    )


def exp_field(X: VectorField, t=1, order=None):
    """Time-t flow. Up-generators give an UpDiffeo, other fields a dict var -> series."""
    if X.is_up():
        F = lie_series(X, TruncatedSeries.variable(X.x, X.vars), t, order)
        return UpDiffeo(F, check=False)
    out = {}
    for v in X.vars:
        out[v] = lie_series(X, TruncatedSeries.variable(v, X.vars), t, order)
    return out


def bernoulli_numbers(n):
    """B_0..B_n with B_1 = -1/2, from sum_{k<m} C(m+1, k) B_k = -(m+1) B_m."""
    B = [QQ(1)]
    for m in range(1, n + 1):
        acc = QQ(0)
        for k in range(m):
            acc += math.comb(m + 1, k) * B[k]
        B.append(-acc / (m + 1))
    return B


def _hdx(p, i=0):
    out = {}
    for e, c in p.items():
        k = e[i]
        if k:
            out[e[:i] + (k - 1,) + e[i + 1 :]] = c * k
    return out


def _hmul(p, q, add):
    out = {}
    get = out.get
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = add(ea, eb)
            out[e] = get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def log_updiffeo(phi: UpDiffeo) -> VectorField:
    """Infinitesimal generator X with exp(X) = phi, degree by degree."""
    if "log" in phi._cache:
        return phi._cache["log"]
    F = phi.F
    N = F.order
    if N == EXACT:
        raise ValueError("a finite truncation order is needed for the logarithm")
    N = int(N)
    n = F.nvars
    add = exponent_adder(n)
    g = phi.displacement().homogeneous_parts(N)
    if g[0]:
        raise InputError("F(0) must vanish")
    a = [dict() for _ in range(N + 1)]
    a[1] = dict(g[1]) if N >= 1 else {}
    if _hdx(a[1]):
        raise InputError("dF/dx(0) must equal 1")
    cap = STABILIZATION_FACTOR * max(N, 1)
    B = bernoulli_numbers(N + 2)
    inv_fact = [_factorial_inverse(j) for j in range(cap + 2)]

    def D(p):
        return _hmul(a[1], _hdx(p), add) if a[1] else {}

    # h[(j, e)] = homogeneous degree-e part of X^j(x), only nonzero entries kept
    h = {}
    if a[1]:
        h[(1, 1)] = a[1]
    top_j = 1
    for d in range(2, N + 1):
        known = {}
        h0 = {}
        j = 2
        parts = {}
        while True:
            K = {}
            for i in range(2, d):
                prev = h.get((j - 1, d - i + 1))
                if a[i] and prev:
                    add_into(K, _hmul(a[i], _hdx(prev), add))
            h0 = D(h0)
            add_into(h0, K)
            if h0:
                parts[j] = h0
                add_into(known, h0, inv_fact[j])
            elif j > top_j + 1:
                break
            j += 1
            if j > cap:
                raise StabilizationFailure(f"logarithm did not stabilize in degree {d}")
        rhs = dict(g[d])
        add_into(rhs, known, QQ(-1))
        ad = {}
        term = rhs
        k = 0
        while term:
            if B[k]:
                add_into(ad, term, B[k] * inv_fact[k])
            term = D(term)
            k += 1
        a[d] = ad
        term = ad
        j = 1
        while term or any(jj >= j for jj in parts):
            piece = dict(parts.get(j, {}))
            add_into(piece, term)
            if piece:
                h[(j, d)] = piece
                top_j = max(top_j, j)
            term = D(term)
            j += 1
    terms = {}
    for part in a:
        terms.update(part)
    field = VectorField.up(TruncatedSeries._raw(F.vars, N, terms, F.mode, F.precision))
    phi._cache["log"] = field
    return field


def generator_unit(phi: UpDiffeo, locus: FixedLocus) -> TruncatedSeries:
    """u with log(phi) = u * f * d/dx; raises NotInDf when u is not a unit."""
    key = ("unit", id(locus))
    if key in phi._cache:
        return phi._cache[key]
    a = log_updiffeo(phi).x_component
    try:
        u = a.divide_exact(locus.f)
    except NotDivisible as exc:
        raise NotInDf(f"generator is not divisible by f (obstruction at {exc.index})") from exc
    if not u.constant_term():
        raise NotInDf("generator / f is not a unit")
    phi._cache[key] = u
    return u


@dataclass
class PathLeg:
    start_unit0: object
    end_unit0: object
    z_star: object


@dataclass
class PathPlan:
    """Straight path from the first generator to the second, or the 1+i detour."""

    z_star: object
    blocked: bool
    legs: list

    @property
    def detour(self):
        return len(self.legs) > 1


def singular_parameter(u1_0, u2_0):
    """z* where z*u1(0) + (1 - z*)u2(0) = 0, or None when u1(0) = u2(0)."""
    den = u2_0 - u1_0
    if not den:
        return None
    return u2_0 / den


def _in_unit_interval(z):
    if z is None:
        return False
    re, im = real_imag(z)
    return not im and 0 <= re <= 1


def interpolated_unit0(u1_0, u2_0, z):
    """Constant term of u1*u2 / (z*u1 + (1 - z)*u2)."""
    return u1_0 * u2_0 / (z * u1_0 + (1 - z) * u2_0)


def plan_path(u1_0, u2_0, detour=False) -> PathPlan:
    z = singular_parameter(u1_0, u2_0)
    blocked = _in_unit_interval(z)
    if not blocked:
        return PathPlan(z, False, [PathLeg(u1_0, u2_0, z)])
    if not detour:
        raise PathThroughSingularity(z)
    mid = interpolated_unit0(u1_0, u2_0, Gaussian(1, 1))
    legs = [PathLeg(u1_0, mid, singular_parameter(u1_0, mid)), PathLeg(mid, u2_0, singular_parameter(mid, u2_0))]
    for leg in legs:
        if _in_unit_interval(leg.z_star):
            raise PathThroughSingularity(leg.z_star, "detour leg also crosses a zero of the unit")
    return PathPlan(z, True, legs)


def _alpha_times_f(alpha, locus):
    if isinstance(alpha, TruncatedSeries):
        return alpha * locus.f
    return alpha.alpha_times_f()


def path_conjugation(phi1, phi2, alpha, locus: FixedLocus, *, detour=False, order=None, verify=True):
    """Normalized sigma with sigma o phi1 = phi2 o sigma, from the path-method flow.

    The flow of alpha * u_z * f d/dx + d/dz (with 1/u_z interpolating 1/u1 and
    1/u2 linearly) is summed as a Lie series in which z rides along as a
    lambda-polynomial coefficient with its own degree budget, then z = 0.
    Exact summation terminates when u1(0) = u2(0) and alpha*f vanishes to
    order 2; otherwise StabilizationFailure is raised.
    """
    u1 = generator_unit(phi1, locus)
    u2 = generator_unit(phi2, locus)
    plan = plan_path(u1.constant_term(), u2.constant_term(), detour)
    if plan.detour or plan.z_star is not None:
        raise StabilizationFailure(
            "generator units differ at the origin; the path flow is an infinite sum "
            "in the path parameter and has no exact truncated value"
        )
    af = _alpha_times_f(alpha, locus)
    N = min(af.order, u1.order, u2.order)
    if order is not None:
        N = min(N, order)
    N = int(N)
    af = af.truncate(N)
    if af.valuation() < 2:
        raise StabilizationFailure("alpha*f must vanish to order 2 for the path flow to terminate")
    cap = N
    w = lift_lambda(u2.truncate(N), cap) + (u1 - u2).truncate(N).map_coefficients(
        lambda c: LambdaPoly.monomial(1, cap, c)
    )
    speed = lift_lambda((u1 * u2 * af).truncate(N), cap) * w.invert_unit()
    x = TruncatedSeries.variable(locus.x, locus.vars, N)
    h = lift_lambda(x, cap)
    sigma = x
    n = locus.vars
    for j in range(1, N + 2):
        dx = h.derivative(locus.x)
        moved = multiply_terms(speed.terms, dx.terms, N, len(n))
        add_into(moved, h.map_coefficients(lambda c: c.derivative()).terms)
        h = TruncatedSeries._raw(n, N, moved)
        at_zero = h.map_coefficients(lambda c: c.coefficient(0))
        sigma = sigma + at_zero * _factorial_inverse(j)
    sig = UpDiffeo(sigma, check=False)
    if verify:
        check_conjugacy(sig, phi1, phi2, locus, N)
    return sig


def check_conjugacy(sigma, phi1, phi2, locus=None, order=None):
    lhs = compose_updiffeo(sigma, phi1).F
    rhs = compose_updiffeo(phi2, sigma).F
    N = min(lhs.order, rhs.order) if order is None else order
    if not (lhs.truncate(N) == rhs.truncate(N)):
        raise ConjugacyFailure("sigma o phi1 != phi2 o sigma at the working order")
    if locus is not None:
        disp = sigma.displacement().truncate(N)
        for fac in locus.factors:
            try:
                disp.divide_exact(fac.poly)
            except NotDivisible as exc:
                raise ConjugacyFailure(f"sigma is not normalized along {fac.poly}") from exc
    return True


def time_alpha_flow(phi2, alpha, locus, order=None):
    """Independent route: the flow of log(phi2) for the point-dependent time alpha.

    x o sigma = sum_j alpha^j X2^j(x) / j!, valid when alpha is a formal series.
    """
    X2 = log_updiffeo(phi2)
    N = min(X2.order, alpha.order) if order is None else order
    x = TruncatedSeries.variable(locus.x, locus.vars, N)
    total = x
    h = x
    apow = TruncatedSeries.constant(QQ(1), locus.vars, N)
    for j in range(1, STABILIZATION_FACTOR * int(N) + 1):
        h = apply_derivation(X2, h).truncate(N)
        apow = (apow * alpha).truncate(N)
        term = (h * apow).truncate(N)
        if h.is_zero() or apow.is_zero():
            return UpDiffeo(total, check=False)
        total = total + term * _factorial_inverse(j)
    raise StabilizationFailure("time-alpha flow did not stabilize")
