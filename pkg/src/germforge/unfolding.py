"""Unipotent parameterized diffeomorphisms, their fixed loci and polynomial families.

The first variable of every ambient variable list is the distinguished
coordinate ``x``; the remaining ones are parameters that every map fixes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .coefficients import QQ, LambdaPoly, rational
from .errors import InputError, NotDivisible, VariableMismatch
from .series import EXACT, TruncatedSeries


def _as_series(value, vars, order=None):
    if isinstance(value, TruncatedSeries):
        return value
    return TruncatedSeries.parse(str(value), vars, order)


@dataclass(frozen=True)
class LocusFactor:
    poly: TruncatedSeries
    multiplicity: int
    unipotent: bool
    curve: dict | None = None


class FixedLocus:
    """Fixed-point set f = 0 with f = f_F * prod f_j**l_j supplied factored.

    ``factors`` holds (f_j, l_j) or (f_j, l_j, curve) where ``curve`` is an
    optional parametrization of {f_j = 0} given as a substitution map.
    """

    def __init__(self, vars, factors, fibered=None):
        self.vars = tuple(vars)
        self.x = self.vars[0]
        one = TruncatedSeries.constant(QQ(1), self.vars)
        self.fibered = one if fibered is None else _as_series(fibered, self.vars)
        if self.fibered.depends_on(self.x):
            raise InputError("the fibered part may not depend on x")
        built = []
        for item in factors:
            poly, mult, *rest = item
            poly = _as_series(poly, self.vars)
            if not poly.depends_on(self.x):
                raise InputError(f"factor {poly} has no x-dependence; put it in the fibered part")
            if int(mult) < 1:
                raise InputError("factor multiplicities must be positive")
            built.append((poly, int(mult), rest[0] if rest else None))
        f_n = one
        for poly, mult, _ in built:
            f_n = f_n * poly**mult
        self.f_nonfibered = f_n
        self.f = self.fibered * f_n
        dfx = self.f.derivative(self.x)
        if self.f.constant_term() or dfx.constant_term():
            raise InputError("f must satisfy f(0) = 0 and df/dx(0) = 0")
        if any(poly.constant_term() for poly, _, _ in built):
            raise InputError("every factor must vanish at the origin")
        self.factors = tuple(
            LocusFactor(poly, mult, self._unipotent(dfx, poly, curve), curve)
            for poly, mult, curve in built
        )

    @staticmethod
    def _unipotent(dfx, poly, curve):
        if curve is not None:
            return dfx.restrict(curve).is_zero()
        try:
            dfx.divide_exact(poly)
            return True
        except NotDivisible:
            return False

    @classmethod
    def monomial_pair(cls, a, b, vars=("x", "y")):
        """f = x**a * (x - y)**b with the lines x = 0 and x = y parametrized by y."""
        x, y = vars
        line = (y,)
        zero_curve = {x: TruncatedSeries.zero(line), y: TruncatedSeries.variable(y, line)}
        diag_curve = {x: TruncatedSeries.variable(y, line), y: TruncatedSeries.variable(y, line)}
        factors = []
        if a:
            factors.append((x, a, zero_curve))
        if b:
            factors.append((f"{x} - {y}", b, diag_curve))
        return cls(vars, factors)

    @classmethod
    def cusp(cls, c, vars=("x", "y", "z")):
        """f = (z - x*y)**c with the surface z = x*y parametrized by (x, y)."""
        x, y, z = vars
        plane = (x, y)
        surface = {
            x: TruncatedSeries.variable(x, plane),
            y: TruncatedSeries.variable(y, plane),
            z: TruncatedSeries.parse(f"{x}*{y}", plane),
        }
        return cls(vars, [(f"{z} - {x}*{y}", c, surface)])

    @property
    def multiplicity(self):
        """nu(f): the valuation of f at the origin."""
        return self.f.valuation()

    def reduced_product(self):
        """P = prod f_j (each non-fibered factor once)."""
        out = TruncatedSeries.constant(QQ(1), self.vars)
        for fac in self.factors:
            out = out * fac.poly
        return out

    def excess_product(self):
        """D' = prod f_j**(l_j - 1)."""
        out = TruncatedSeries.constant(QQ(1), self.vars)
        for fac in self.factors:
            out = out * fac.poly ** (fac.multiplicity - 1)
        return out

    def to_json(self):
        return {
            "type": "locus",
            "fibered": self.fibered.to_json(),
            "factors": [
                {"f": fac.poly.to_json(), "l": fac.multiplicity, "unipotent": fac.unipotent}
                for fac in self.factors
            ],
        }

    @classmethod
    def from_json(cls, data):
        if data.get("type") != "locus":
            raise InputError("expected a JSON object of type 'locus'")
        factors = [(TruncatedSeries.from_json(fa["f"]), fa["l"]) for fa in data["factors"]]
        if not factors:
            raise InputError("a locus needs at least one non-fibered factor")
        vars = factors[0][0].vars
        fib = data.get("fibered")
        locus = cls(vars, factors, TruncatedSeries.from_json(fib) if fib else None)
        for fac, spec in zip(locus.factors, data["factors"]):
            if "unipotent" in spec and bool(spec["unipotent"]) != fac.unipotent:
                raise InputError(f"unipotent flag of factor {fac.poly} does not match the check")
        return locus

    def __repr__(self):
        return f"FixedLocus(f = {self.f})"


class UpDiffeo:
    """(x, params) -> (F, params) with F(0) = 0 and dF/dx(0) = 1."""

    def __init__(self, F: TruncatedSeries, check=True):
        self.F = F
        self._cache = {}
        if check:
            if F.constant_term():
                raise InputError("F(0) must vanish")
            lin = F.coefficient((1,) + (0,) * (F.nvars - 1))
            if F.order >= 1 and lin != 1:
                raise InputError("dF/dx(0) must equal 1")

    @property
    def vars(self):
        return self.F.vars

    @property
    def order(self):
        return self.F.order

    @property
    def x(self):
        return self.F.vars[0]

    @classmethod
    def identity(cls, vars, order=None):
        return cls(TruncatedSeries.variable(vars[0], vars, order))

    def truncate(self, order):
        return UpDiffeo(self.F.truncate(order), check=False)

    def displacement(self):
        """F - x."""
        return self.F - TruncatedSeries.variable(self.x, self.vars)

    def __eq__(self, other):
        if not isinstance(other, UpDiffeo):
            return NotImplemented
        return self.F == other.F

    __hash__ = None

    def __matmul__(self, other):
        return compose_updiffeo(self, other)

    def to_json(self):
        return {"type": "updiffeo", "F": self.F.to_json()}

    @classmethod
    def from_json(cls, data):
        if data.get("type") != "updiffeo":
            raise InputError("expected a JSON object of type 'updiffeo'")
        return cls(TruncatedSeries.from_json(data["F"]))

    def __repr__(self):
        return f"UpDiffeo(x -> {self.F})"


def compose_updiffeo(phi: UpDiffeo, psi: UpDiffeo) -> UpDiffeo:
    """phi o psi, i.e. F_phi evaluated at (F_psi, params)."""
    if phi.vars != psi.vars:
        raise VariableMismatch("maps live on different variable lists")
    return UpDiffeo(phi.F.compose({phi.x: psi.F}), check=False)


def invert_updiffeo(phi: UpDiffeo) -> UpDiffeo:
    """Compositional inverse by Newton iteration on G with F(G, params) = x."""
    N = phi.order
    if N == EXACT:
        raise ValueError("inverting needs a finite truncation order")
    x = TruncatedSeries.variable(phi.x, phi.vars, N)
    dF = phi.F.derivative(phi.x)
    G = x
    for _ in range(int(N) + 2):
        resid = phi.F.compose({phi.x: G}) - x
        if resid.truncate(N).is_zero():
            break
        # resid vanishes at 0, so the unknown top degree of the slope never matters
        slope = dF.compose({phi.x: G})
        slope = TruncatedSeries._raw(slope.vars, N, slope.terms)
        G = (G - resid.truncate(N) * slope.invert_unit()).truncate(N)
    return UpDiffeo(TruncatedSeries._raw(G.vars, N, G.terms), check=False)


@dataclass
class Membership:
    """Truthy verdict of an ideal-membership test, valid up to ``order``."""

    holds: bool
    order: float
    quotient: TruncatedSeries | None = None
    obstruction: tuple | None = None
    note: str = ""

    def __bool__(self):
        return self.holds


def in_Df(phi: UpDiffeo, locus: FixedLocus) -> Membership:
    """(F - x)/f is a unit; the certificate carries that unit."""
    if phi.vars != locus.vars:
        raise VariableMismatch("map and locus use different variables")
    try:
        unit = phi.displacement().divide_exact(locus.f)
    except NotDivisible as exc:
        return Membership(False, phi.order, obstruction=exc.index, note="F - x is not divisible by f")
    if not unit.constant_term():
        return Membership(False, unit.order, quotient=unit, note="quotient is not a unit")
    return Membership(True, unit.order, quotient=unit)


def in_Df_prime(phi: UpDiffeo, locus: FixedLocus) -> Membership:
    """F - x o exp(f d/dx) lies in (f**2); the certificate carries the quotient."""
    from .liecalc import VectorField, exp_field

    if phi.vars != locus.vars:
        raise VariableMismatch("map and locus use different variables")
    flow = exp_field(VectorField.up(locus.f.truncate(phi.order)), 1)
    try:
        q = (phi.F - flow.F).divide_exact(locus.f * locus.f)
    except NotDivisible as exc:
        return Membership(False, phi.order, obstruction=exc.index, note="not divisible by f^2")
    return Membership(True, q.order, quotient=q)


def lift_lambda(series: TruncatedSeries, cap: int) -> TruncatedSeries:
    """View a series as having constant lambda-polynomial coefficients."""
    return series.map_coefficients(lambda c: LambdaPoly.constant(c, cap))


def lambda_coefficient(series: TruncatedSeries, k: int) -> TruncatedSeries:
    """Coefficient of lambda**k of a series with LambdaPoly coefficients."""
    return series.map_coefficients(lambda c: c.coefficient(k) if isinstance(c, LambdaPoly) else (c if k == 0 else 0))


def lambda_degrees(series: TruncatedSeries) -> dict:
    """Monomial -> lambda-degree of its coefficient."""
    return {e: (c.degree if isinstance(c, LambdaPoly) else 0) for e, c in series.terms.items()}


@dataclass
class PolynomialFamily:
    """F_lambda = F_0 + lambda * f**2 * Delta, with lambda kept symbolic."""

    base: UpDiffeo
    locus: FixedLocus
    delta: TruncatedSeries
    lambda_cap: int = 1
    check: bool = field(default=True, repr=False)

    def __post_init__(self):
        if self.base.vars != self.locus.vars or self.delta.vars != self.locus.vars:
            raise VariableMismatch("family pieces use different variables")
        if self.check:
            m = in_Df_prime(self.base, self.locus)
            if not m:
                raise InputError(f"base map is not in D_f' (obstruction at {m.obstruction})")

    def perturbation(self):
        return self.locus.f * self.locus.f * self.delta

    def lambda_series(self, cap=None) -> UpDiffeo:
        """F_lambda as a series with lambda-polynomial coefficients, capped at ``cap``."""
        cap = self.lambda_cap if cap is None else cap
        F = lift_lambda(self.base.F, cap)
        pert = self.perturbation().truncate(self.base.order)
        F = F + pert.map_coefficients(lambda c: LambdaPoly.monomial(1, cap, c))
        return UpDiffeo(F, check=False)

    def at(self, value) -> UpDiffeo:
        return specialize_lambda(self, value)


def specialize_lambda(fam: PolynomialFamily, value) -> UpDiffeo:
    value = rational(value) if not hasattr(value, "re") else value
    F = fam.base.F + fam.perturbation().truncate(fam.base.order) * value
    return UpDiffeo(F)
