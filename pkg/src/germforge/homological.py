"""Homological equations d(alpha)/dx = (1/u1 - 1/u2)/f and their special solutions.

A special solution has the shape alpha = btilde / (f_F * D') with
D' = prod f_j**(l_j - 1). Writing P = prod f_j and K for the numerator of the
right-hand side, the equation becomes the linear condition

    P * (D' * d(btilde)/dx - btilde * dD'/dx) = K * D'

on the coefficients of btilde, which is solved by exact sparse elimination
in increasing total degree. btilde is then split as tau + beta * D' by
division with respect to the local degree order.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import mpmath

from .coefficients import QQ, coefficient_abs
from .config import default_precision
from .errors import InputError, NotDivisible, NotSpecial
from .liecalc import generator_unit
from .series import EXACT, MeromorphicSeries, TruncatedSeries
from .unfolding import FixedLocus, UpDiffeo

PASS, FAIL = "PASS", "FAIL"
BOUNDED, GROWING, INCONCLUSIVE = "BOUNDED", "GROWING", "INCONCLUSIVE"
DEFAULT_GROWTH_THRESHOLD = 4
MIN_WINDOW = 6


@dataclass
class HomEquation:
    numerator: TruncatedSeries
    u1: TruncatedSeries
    u2: TruncatedSeries
    locus: FixedLocus
    pole_free: bool
    reduced: TruncatedSeries | None = None

    @property
    def rhs(self) -> MeromorphicSeries:
        return MeromorphicSeries(self.numerator, [(self.locus.f, 1)])

    @property
    def order(self):
        return self.numerator.order


def build_homological(phi1: UpDiffeo, phi2: UpDiffeo, locus: FixedLocus) -> HomEquation:
    """Equation attached to the pair: numerator 1/u1 - 1/u2 over f."""
    u1 = generator_unit(phi1, locus)
    u2 = generator_unit(phi2, locus)
    return equation_from_units(u1, u2, locus)


def equation_from_units(u1, u2, locus):
    num = u1.invert_unit() - u2.invert_unit()
    try:
        reduced = num.divide_exact(locus.f)
        pole_free = True
    except NotDivisible:
        reduced, pole_free = None, False
    return HomEquation(num, u1, u2, locus, pole_free, reduced)


@dataclass
class SpecialSolution:
    """alpha = tau / (f_F * D') + beta / f_F."""

    tau: TruncatedSeries
    beta: TruncatedSeries
    locus: FixedLocus
    pole_free: bool

    @property
    def order(self):
        return min(self.tau.order, self.beta.order)

    def numerator(self):
        """btilde = tau + beta * D', the numerator over f_F * D'."""
        return self.tau + self.beta * self.locus.excess_product()

    def alpha(self) -> MeromorphicSeries:
        dens = [(self.locus.fibered, 1)] + [(fac.poly, fac.multiplicity - 1) for fac in self.locus.factors]
        return MeromorphicSeries(self.numerator(), [(d, k) for d, k in dens if k and d.degree() > 0])

    def alpha_series(self) -> TruncatedSeries:
        """alpha itself when it is a formal power series."""
        return self.alpha().to_series()

    def alpha_times_f(self) -> TruncatedSeries:
        """alpha * f = tau * P + beta * f_N, always formal."""
        return self.tau * self.locus.reduced_product() + self.beta * self.locus.f_nonfibered

    def verify(self, eq: HomEquation, order=None) -> bool:
        """Cross-multiplied check of d(alpha)/dx = numerator / f."""
        loc = self.locus
        bt = self.numerator()
        Dp = loc.excess_product()
        lhs = loc.reduced_product() * (Dp * bt.derivative(loc.x) - bt * Dp.derivative(loc.x))
        rhs = eq.numerator * Dp
        N = min(lhs.order, rhs.order) if order is None else order
        return lhs.truncate(N) == rhs.truncate(N)


def decompose(sol: SpecialSolution):
    return sol.tau, sol.beta


def _normalized(beta, x):
    """beta - beta|_{x=0}."""
    i = beta.vars.index(x)
    return beta._like({e: c for e, c in beta.terms.items() if e[i]})


class _Echelon:
    """Incremental row echelon form; each pivot row's largest variable is its pivot."""

    def __init__(self, key):
        self.key = key
        self.rows = {}

    def insert(self, row, rhs):
        """Reduce and store; returns the reduced rhs when the row becomes empty."""
        row = dict(row)
        while row:
            top = max(row, key=self.key)
            if top in self.rows:
                prow, prhs = self.rows[top]
                c = row[top]
                for v, pc in prow.items():
                    val = row.get(v, 0) - c * pc
                    if val:
                        row[v] = val
                    else:
                        row.pop(v, None)
                rhs = rhs - c * prhs
            else:
                inv = QQ(1) / row[top]
                self.rows[top] = ({v: c * inv for v, c in row.items()}, rhs * inv)
                return None
        return rhs

    def solve(self):
        values = {}
        for var in sorted(self.rows, key=self.key):
            prow, prhs = self.rows[var]
            acc = prhs
            for v, c in prow.items():
                if v != var:
                    acc -= c * values.get(v, 0)
            values[var] = acc
        return {v: c for v, c in values.items() if c}


def solve_special(eq: HomEquation, *, margin=None) -> SpecialSolution:
    """Special solution with the canonical normalization beta|_{x=0} = 0.

    Pole-free equations are integrated directly. Otherwise the linear system
    for btilde is eliminated equation by equation in increasing total degree
    (ties: higher x-degree first); an inconsistent equation raises
    NotSpecial with the total degree of the obstructed term of f_F * alpha.
    """
    loc = eq.locus
    x = loc.x
    if eq.pole_free:
        alpha = eq.reduced.integrate(x)
        beta = alpha * loc.fibered if loc.fibered.degree() > 0 else alpha
        zero = TruncatedSeries.zero(loc.vars, beta.order)
        return SpecialSolution(zero, _normalized(beta, x), loc, True)

    P = loc.reduced_product()
    Dp = loc.excess_product()
    dDp = Dp.derivative(x)
    vP, vD = P.valuation(), Dp.valuation()
    shift = vP + vD - 1
    rhs = (eq.numerator * Dp).truncate(eq.numerator.order + vD)
    E = int(rhs.order)
    M = E - shift
    if M < 0:
        raise InputError("equation is known to too low an order to solve")
    n = len(loc.vars)
    xi = loc.vars.index(x)

    def monomials(deg):
        if n == 1:
            yield (deg,)
            return
        for first in range(deg, -1, -1):
            for rest in _compositions(deg - first, n - 1):
                yield (first,) + rest

    rows = {}
    for m in range(M + 1):
        for e in monomials(m):
            mono = TruncatedSeries(loc.vars, E, {e: QQ(1)})
            image = P * (Dp * mono.derivative(x) - mono * dDp)
            for t, c in image.terms.items():
                if sum(t) <= E:
                    rows.setdefault(t, {})[e] = c
    targets = set(rows) | {t for t in rhs.terms if sum(t) <= E}
    ordered = sorted(targets, key=lambda t: (sum(t), -t[xi], t))
    ech = _Echelon(key=lambda e: (sum(e), e[xi], e))
    for t in ordered:
        left = ech.insert(rows.get(t, {}), rhs.coefficient(t))
        if left:
            degree = sum(t) - vP - 2 * vD + 1
            err = NotSpecial(degree)
            err.relation = (t, left)
            raise err
    values = ech.solve()
    margin = loc.multiplicity + 1 if margin is None else margin
    top = max(M - margin, 0)
    btilde = TruncatedSeries(loc.vars, top, {e: c for e, c in values.items() if sum(e) <= top})
    quotient, tau = btilde.local_divmod(Dp)
    tau = tau.truncate(quotient.order)
    sol = SpecialSolution(tau, _normalized(quotient, x), loc, False)
    if not sol.verify(eq, order=quotient.order + shift):
        raise RuntimeError("special solution failed its substitution check")
    return sol


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


# -- growth diagnostics -------------------------------------------------------


def block_maxima(roots, block):
    """Max of consecutive runs of ``block`` entries; a short-tail sup of the sequence."""
    return [max(roots[i : i + block]) for i in range(0, len(roots), block)]


def growth_verdict(roots, threshold=DEFAULT_GROWTH_THRESHOLD, block=1):
    """BOUNDED / GROWING / INCONCLUSIVE from a root-test sequence over a window.

    With ``block`` > 1 the policy is applied to block maxima, which absorbs
    periodic dips of the per-degree sequence. A window of at most five
    degrees is always INCONCLUSIVE.
    """
    if len(roots) < MIN_WINDOW:
        return INCONCLUSIVE
    if block > 1:
        roots = block_maxima(roots, block)
        if len(roots) < 3:
            return INCONCLUSIVE
    tail = roots[len(roots) - math.ceil(len(roots) / 3) :]
    if all(b > a for a, b in zip(tail, tail[1:])) and tail[-1] > threshold:
        return GROWING
    if max(tail) <= threshold:
        return BOUNDED
    return INCONCLUSIVE


@dataclass
class RestrictionReport:
    component: str
    degrees: list
    max_abs: list
    roots: list
    window: tuple
    verdict: str
    order: float
    threshold: float = DEFAULT_GROWTH_THRESHOLD
    precision: int = field(default_factory=default_precision)
    block: int = 1
    per_degree_verdict: str | None = None

    def rows(self):
        for d, m, r in zip(self.degrees, self.max_abs, self.roots):
            yield d, mpmath.nstr(m, 30), mpmath.nstr(r, 30)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["degree", "max_abs_coeff", "root_test"])
        for row in self.rows():
            w.writerow(row)
        return buf.getvalue()

    def to_json(self):
        return {
            "component": self.component,
            "window": list(self.window),
            "order": None if self.order == EXACT else int(self.order),
            "threshold": str(self.threshold),
            "precision": self.precision,
            "verdict": self.verdict,
            "block": self.block,
            "per_degree_verdict": self.per_degree_verdict or self.verdict,
            "degrees": [
                {"degree": d, "max_abs_coeff": m, "root_test": r} for d, m, r in self.rows()
            ],
        }


def _window_range(window, order):
    if isinstance(window, int):
        lo, hi = 1, window
    else:
        lo, hi = window
    lo = max(lo, 1)
    if order != EXACT:
        hi = min(hi, int(order))
    return lo, hi


def root_test(series: TruncatedSeries, window, *, component="series", threshold=None, precision=None, block=1):
    """Per-degree max |coefficient| and its d-th root over the window."""
    prec = default_precision() if precision is None else precision
    threshold = DEFAULT_GROWTH_THRESHOLD if threshold is None else threshold
    lo, hi = _window_range(window, series.order)
    best = {}
    for e, c in series.terms.items():
        d = sum(e)
        if lo <= d <= hi:
            a = coefficient_abs(c, prec)
            if d not in best or a > best[d]:
                best[d] = a
    degrees = list(range(lo, hi + 1))
    max_abs, roots = [], []
    with mpmath.workprec(prec):
        for d in degrees:
            m = best.get(d, mpmath.mpf(0))
            max_abs.append(m)
            roots.append(mpmath.root(m, d) if m else mpmath.mpf(0))
    verdict = growth_verdict(roots, threshold, block)
    plain = growth_verdict(roots, threshold)
    return RestrictionReport(
        component, degrees, max_abs, roots, (lo, hi), verdict, series.order, threshold, prec, block, plain
    )


def restriction_diagnostic(sol: SpecialSolution, curve, window, *, component=None, threshold=None, precision=None):
    """Root test of beta restricted along a parametrized component."""
    fib = sol.locus.fibered
    if fib.degree() > 0 and fib.restrict(curve).truncate(sol.beta.order).is_zero():
        raise InputError("the curve lies inside the fibered part f_F = 0")
    restricted = sol.beta.restrict(curve)
    name = component or ",".join(f"{k}={v}" for k, v in sorted(curve.items(), key=lambda t: t[0]))
    return root_test(restricted, window, component=name, threshold=threshold, precision=precision)
