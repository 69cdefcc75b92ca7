"""Sparse truncated multivariate power series.

A ``TruncatedSeries`` stores the coefficients of total degree at most
``order`` in a dict keyed by exponent tuples; zero coefficients are never
stored. ``order`` may be ``math.inf``, which marks an exact polynomial.
Binary operations keep the smaller of the two orders, so a result never
claims more precision than its least precise input.
"""

from __future__ import annotations

import ast
import math
import operator
from collections import defaultdict

import mpmath

from .coefficients import (
    QQ,
    Gaussian,
    LambdaPoly,
    coefficient_abs,
    float_to_hex,
    hex_to_float,
    rational,
    real_imag,
    to_bigfloat,
)
from .config import checked_precision
from .errors import InputError, NotAUnit, NotDivisible, VariableMismatch

EXACT = math.inf
_COEFF_TYPES = (int, type(QQ(0)), Gaussian, LambdaPoly, mpmath.mpf, mpmath.mpc)


def _adder(n):
    if n == 1:
        return lambda a, b: (a[0] + b[0],)
    if n == 2:
        return lambda a, b: (a[0] + b[0], a[1] + b[1])
    if n == 3:
        return lambda a, b: (a[0] + b[0], a[1] + b[1], a[2] + b[2])
    return lambda a, b: tuple(map(operator.add, a, b))


_ADDERS = {}


def exponent_adder(n):
    if n not in _ADDERS:
        _ADDERS[n] = _adder(n)
    return _ADDERS[n]


def grouped_by_degree(terms):
    groups = defaultdict(list)
    for e, c in terms.items():
        groups[sum(e)].append((e, c))
    return sorted(groups.items())


def multiply_terms(ta, tb, order, nvars):
    """Product of two term dicts, dropping every degree above ``order``."""
    if not ta or not tb:
        return {}
    if len(ta) > len(tb):
        ta, tb = tb, ta
    add = exponent_adder(nvars)
    groups = grouped_by_degree(tb)
    out = {}
    get = out.get
    for ea, ca in ta.items():
        budget = order - sum(ea)
        for db, items in groups:
            if db > budget:
                break
            for eb, cb in items:
                e = add(ea, eb)
                out[e] = get(e, 0) + ca * cb
    return {e: c for e, c in out.items() if c}


def add_into(target, terms, scale=None):
    """target += scale * terms, in place, removing cancellations."""
    for e, c in terms.items():
        if scale is not None:
            c = c * scale
        v = target.get(e, 0) + c
        if v:
            target[e] = v
        else:
            target.pop(e, None)
    return target


def reciprocal(c):
    if isinstance(c, LambdaPoly):
        return c.inverse()
    if isinstance(c, (mpmath.mpf, mpmath.mpc)):
        return 1 / c
    return QQ(1) / c


class TruncatedSeries:
    """Element of K[[vars]] known up to and including total degree ``order``."""

    __slots__ = ("mode", "order", "precision", "terms", "vars")

    def __init__(self, vars, order=None, terms=None, *, mode="exact", precision=None):
        self.vars = tuple(vars)
        if len(set(self.vars)) != len(self.vars):
            raise VariableMismatch(f"repeated variable names in {self.vars}")
        self.order = EXACT if order is None else order
        if self.order != EXACT and (int(self.order) != self.order or self.order < -1):
            raise ValueError(f"order must be an integer >= -1, got {order!r}")
        if mode not in ("exact", "bigfloat"):
            raise ValueError(f"unknown mode {mode!r}")
        self.mode = mode
        self.precision = checked_precision(precision) if mode == "bigfloat" else None
        clean = {}
        n = len(self.vars)
        for e, c in (terms or {}).items():
            e = tuple(int(k) for k in e)
            if len(e) != n or min(e, default=0) < 0:
                raise VariableMismatch(f"exponent {e} does not fit variables {self.vars}")
            if not isinstance(c, _COEFF_TYPES):
                c = rational(c)
            if c and sum(e) <= self.order:
                clean[e] = c
        self.terms = clean

    @classmethod
    def _raw(cls, vars, order, terms, mode="exact", precision=None):
        obj = cls.__new__(cls)
        obj.vars = vars
        obj.order = order
        obj.terms = terms
        obj.mode = mode
        obj.precision = precision
        return obj

    def _like(self, terms, order=None):
        return TruncatedSeries._raw(
            self.vars, self.order if order is None else order, terms, self.mode, self.precision
        )

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, vars, order=None):
        return cls(vars, order)

    @classmethod
    def constant(cls, value, vars, order=None):
        return cls(vars, order, {(0,) * len(tuple(vars)): value})

    @classmethod
    def variable(cls, name, vars, order=None):
        vars = tuple(vars)
        if name not in vars:
            raise VariableMismatch(f"{name!r} is not one of {vars}")
        e = tuple(1 if v == name else 0 for v in vars)
        return cls(vars, order, {e: QQ(1)})

    @classmethod
    def parse(cls, text, vars, order=None):
        """Build a series from an arithmetic expression such as ``"1/(1 - x*y)"``.

        ``I`` denotes the imaginary unit. Division by a series requires it to
        be a unit and ``order`` to be finite.
        """
        vars = tuple(vars)
        tree = ast.parse(text.replace("^", "**"), mode="eval")

        def ev(node):
            if isinstance(node, ast.Expression):
                return ev(node.body)
            if isinstance(node, ast.Constant) and isinstance(node.value, int):
                return QQ(node.value)
            if isinstance(node, ast.Name):
                if node.id in vars:
                    return cls.variable(node.id, vars, order)
                if node.id == "I":
                    return Gaussian(0, 1)
                raise InputError(f"unknown name {node.id!r} in {text!r}")
            if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
                v = ev(node.operand)
                return -v if isinstance(node.op, ast.USub) else v
            if isinstance(node, ast.BinOp):
                a, b = ev(node.left), ev(node.right)
                if isinstance(node.op, ast.Add):
                    return a + b
                if isinstance(node.op, ast.Sub):
                    return a - b
                if isinstance(node.op, ast.Mult):
                    return a * b
                if isinstance(node.op, ast.Div):
                    if isinstance(a, TruncatedSeries) or isinstance(b, TruncatedSeries):
                        if not isinstance(a, TruncatedSeries):
                            a = cls.constant(a, vars, order)
                        return a / b
                    return a / b
                if isinstance(node.op, ast.Pow) and isinstance(node.right, ast.Constant):
                    return a ** int(node.right.value)
            raise InputError(f"unsupported syntax in {text!r}")

        value = ev(tree)
        if not isinstance(value, TruncatedSeries):
            value = cls.constant(value, vars, order)
        return value

    # -- basic queries ------------------------------------------------------

    @property
    def nvars(self):
        return len(self.vars)

    @property
    def is_polynomial(self):
        return self.order == EXACT

    def is_zero(self):
        return not self.terms

    def coefficient(self, exps):
        return self.terms.get(tuple(exps), QQ(0))

    def constant_term(self):
        return self.terms.get((0,) * self.nvars, QQ(0))

    def valuation(self):
        """Lowest total degree carrying a nonzero coefficient (inf for zero)."""
        return min((sum(e) for e in self.terms), default=math.inf)

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def max_exponent(self, var):
        i = self.index(var)
        return max((e[i] for e in self.terms), default=-1)

    def index(self, var):
        try:
            return self.vars.index(var)
        except ValueError:
            raise VariableMismatch(f"{var!r} is not one of {self.vars}") from None

    def homogeneous(self, d):
        return {e: c for e, c in self.terms.items() if sum(e) == d}

    def homogeneous_parts(self, top=None):
        top = self.order if top is None else top
        if top == EXACT:
            top = self.degree()
        parts = [dict() for _ in range(int(top) + 1)]
        for e, c in self.terms.items():
            d = sum(e)
            if d <= top:
                parts[d][e] = c
        return parts

    def truncate(self, order):
        order = min(order, self.order)
        return self._like({e: c for e, c in self.terms.items() if sum(e) <= order}, order)

    def map_coefficients(self, fn):
        out = {}
        for e, c in self.terms.items():
            v = fn(c)
            if v:
                out[e] = v
        return self._like(out)

    def embed(self, vars):
        """Same series viewed in a larger (or reordered) variable list."""
        vars = tuple(vars)
        pos = [vars.index(v) if v in vars else None for v in self.vars]
        out = {}
        for e, c in self.terms.items():
            new = [0] * len(vars)
            for k, p in zip(e, pos):
                if k:
                    if p is None:
                        raise VariableMismatch(f"series depends on a variable missing from {vars}")
                    new[p] = k
            out[tuple(new)] = c
        return TruncatedSeries._raw(vars, self.order, out, self.mode, self.precision)

    def depends_on(self, var):
        i = self.index(var)
        return any(e[i] for e in self.terms)

    # -- ring operations ----------------------------------------------------

    def _check(self, other):
        if other.vars != self.vars:
            raise VariableMismatch(f"variables differ: {self.vars} vs {other.vars}")
        mode, prec = self.mode, self.precision
        if other.mode == "bigfloat":
            mode = "bigfloat"
            prec = other.precision if prec is None else min(prec, other.precision)
        return min(self.order, other.order), mode, prec

    def _coerce(self, other):
        if isinstance(other, TruncatedSeries):
            return other
        if isinstance(other, _COEFF_TYPES) or isinstance(other, (int,)):
            return TruncatedSeries._raw(
                self.vars, EXACT, {(0,) * self.nvars: other} if other else {}, "exact", None
            )
        return None

    def __add__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        order, mode, prec = self._check(other)
        out = {e: c for e, c in self.terms.items() if sum(e) <= order}
        add_into(out, {e: c for e, c in other.terms.items() if sum(e) <= order})
        return TruncatedSeries._raw(self.vars, order, out, mode, prec)

    __radd__ = __add__

    def __neg__(self):
        return self._like({e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is None:
            return NotImplemented
        return other + (-self)

    def scale(self, c):
        if not c:
            return self._like({})
        return self._like({e: v * c for e, v in self.terms.items() if v * c})

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            order, mode, prec = self._check(other)
            with _precision(prec):
                terms = multiply_terms(self.terms, other.terms, order, self.nvars)
            return TruncatedSeries._raw(self.vars, order, terms, mode, prec)
        if isinstance(other, _COEFF_TYPES):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, TruncatedSeries):
            return self * other.invert_unit()
        if isinstance(other, _COEFF_TYPES):
            return self.scale(reciprocal(other))
        return NotImplemented

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers are supported")
        result = TruncatedSeries.constant(QQ(1), self.vars, self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other):
        other = self._coerce(other) if not isinstance(other, TruncatedSeries) else other
        if other is None:
            return NotImplemented
        if other.vars != self.vars:
            return False
        order = min(self.order, other.order)
        a = {e: c for e, c in self.terms.items() if sum(e) <= order}
        b = {e: c for e, c in other.terms.items() if sum(e) <= order}
        return a == b

    __hash__ = None

    # -- calculus -----------------------------------------------------------

    def derivative(self, var=None):
        """Partial derivative; the result is known to one degree less."""
        i = 0 if var is None else self.index(var)
        out = {}
        for e, c in self.terms.items():
            k = e[i]
            if k:
                ne = e[:i] + (k - 1,) + e[i + 1 :]
                out[ne] = c * k
        return self._like(out, self.order - 1)

    def integrate(self, var=None):
        """Antiderivative vanishing on ``var = 0``; known to one degree more."""
        i = 0 if var is None else self.index(var)
        out = {}
        for e, c in self.terms.items():
            k = e[i] + 1
            out[e[:i] + (k,) + e[i + 1 :]] = c / k if not isinstance(c, int) else QQ(c, k)
        return self._like(out, self.order + 1)

    def invert_unit(self, order=None):
        """Multiplicative inverse of a series with nonzero constant term."""
        a0 = self.constant_term()
        if not a0:
            raise NotAUnit("constant term is zero")
        top = self.order if order is None else min(order, self.order)
        if top == EXACT:
            if self.degree() == 0:
                return self._like({(0,) * self.nvars: reciprocal(a0)})
            raise ValueError("inverse of a non-constant polynomial needs a finite order")
        top = int(top)
        inv0 = reciprocal(a0)
        parts = self.homogeneous_parts(top)
        add = exponent_adder(self.nvars)
        out = [{(0,) * self.nvars: inv0}]
        with _precision(self.precision):
            for d in range(1, top + 1):
                acc = {}
                for k in range(1, d + 1):
                    if parts[k] and out[d - k]:
                        _hmul_into(acc, parts[k], out[d - k], add)
                out.append({e: -c * inv0 for e, c in acc.items() if c})
        terms = {}
        for p in out:
            terms.update(p)
        return self._like(terms, top)

    def divide_exact(self, g):
        """Quotient q with self = q * g, or NotDivisible at the first obstruction.

        Works degree by degree, dividing by the lowest homogeneous part of g.
        The quotient is known to order ``min(orders) - valuation(g)``.
        """
        if not isinstance(g, TruncatedSeries):
            return self / g
        q, _ = self._local_division(g, strict=True)
        return q

    def local_divmod(self, g):
        """(q, r) with self = q*g + r and no monomial of r divisible by the
        local leading monomial of g (lowest degree, ties broken lex with the
        first variable first). q is known to ``min(orders) - valuation(g)`` and
        r to ``min(orders)``."""
        return self._local_division(g, strict=False)

    def _local_division(self, g, strict):
        order, mode, prec = self._check(g)
        if g.is_zero():
            raise ZeroDivisionError("division by the zero series")
        v = g.valuation()
        low = g.homogeneous(v)
        lead = max(low)
        lc_inv = reciprocal(low[lead])
        add = exponent_adder(self.nvars)
        g_items = sorted(g.terms.items(), key=lambda t: sum(t[0]))
        rem = defaultdict(dict)
        for e, c in self.terms.items():
            if sum(e) <= order:
                rem[sum(e)][e] = c
        q = {}
        r = {}
        top = order if order != EXACT else max(rem, default=-1)
        d = 0
        while d <= top:
            part = rem.pop(d, None)
            while part:
                t = max(part)
                m = tuple(a - b for a, b in zip(t, lead))
                if d < v or min(m) < 0:
                    if strict:
                        raise NotDivisible(t)
                    r[t] = part.pop(t)
                    continue
                coef = part[t] * lc_inv
                q[m] = q.get(m, 0) + coef
                dm = d - v
                for eg, cg in g_items:
                    de = dm + sum(eg)
                    if de > order:
                        break
                    e = add(m, eg)
                    bucket = part if de == d else rem[de]
                    val = bucket.get(e, 0) - coef * cg
                    if val:
                        bucket[e] = val
                    else:
                        bucket.pop(e, None)
            d += 1
        if order == EXACT and any(rem.values()):
            raise ValueError("quotient is not a polynomial; truncate before dividing")
        q = {e: c for e, c in q.items() if c}
        qo = order - v
        r = {e: c for e, c in r.items() if c}
        return (
            TruncatedSeries._raw(self.vars, qo, q, mode, prec),
            TruncatedSeries._raw(self.vars, order, r, mode, prec),
        )

    def compose(self, subs, *, allow_constant=False):
        """Substitute series for variables.

        ``subs`` maps variable names of ``self`` to series that share one
        target variable list. Variables not mentioned map to the target
        variable of the same name. Substituted series must vanish at the
        origin unless ``allow_constant`` is set, in which case ``self`` is
        treated as an exact polynomial.
        """
        if not subs:
            return self
        targets = {s.vars for s in subs.values()}
        if len(targets) != 1:
            raise VariableMismatch("substituted series must share one variable list")
        tvars = targets.pop()
        order = min([self.order] + [s.order for s in subs.values()])
        ident = []
        nontrivial = []
        for i, v in enumerate(self.vars):
            s = subs.get(v)
            if s is not None:
                if s.vars == tvars and v in tvars and s.terms == {
                    tuple(1 if w == v else 0 for w in tvars): 1
                }:
                    s = None
                elif s.constant_term() and not allow_constant:
                    raise ValueError(f"substitution for {v!r} has a constant term")
            if s is None:
                if v not in tvars:
                    raise VariableMismatch(f"no substitution given for {v!r}")
                ident.append((i, tvars.index(v)))
            else:
                nontrivial.append((i, s))
        n_t = len(tvars)
        modes = [self.mode] + [s.mode for s in subs.values()]
        precs = [p for p in [self.precision] + [s.precision for s in subs.values()] if p]
        mode = "bigfloat" if "bigfloat" in modes else "exact"
        prec = min(precs) if precs else None

        def embed(terms):
            out = {}
            for e, c in terms.items():
                new = [0] * n_t
                for i, p in ident:
                    new[p] = e[i]
                out[tuple(new)] = c
            return out

        def evaluate(terms, pending, budget):
            if not pending:
                return {e: c for e, c in embed(terms).items() if sum(e) <= budget}
            if not terms:
                return {}
            (i, s), rest = pending[0], pending[1:]
            groups = defaultdict(dict)
            for e, c in terms.items():
                groups[e[i]][e[:i] + (0,) + e[i + 1 :]] = c
            vs = s.valuation()
            vs = 0 if vs == math.inf else vs
            acc = {}
            for k in range(max(groups), -1, -1):
                b = budget - k * vs
                if b < 0:
                    continue
                if acc:
                    acc = multiply_terms(acc, s.terms, b, n_t)
                g = groups.get(k)
                if g:
                    add_into(acc, evaluate(g, rest, b))
            return acc

        with _precision(prec):
            terms = evaluate(
                {e: c for e, c in self.terms.items() if sum(e) <= order or allow_constant},
                nontrivial,
                order,
            )
        return TruncatedSeries._raw(tvars, order, terms, mode, prec)

    def restrict(self, curve):
        """Pull back along a curve given as a substitution for every variable."""
        missing = [v for v in self.vars if v not in curve]
        if missing:
            raise VariableMismatch(f"curve does not parametrize {missing}")
        return self.compose(curve)

    def l1_norm(self, prec=256):
        """Sum of coefficient magnitudes within the truncation, as a big float."""
        with mpmath.workprec(prec):
            total = mpmath.mpf(0)
            for c in self.terms.values():
                total += coefficient_abs(c, prec)
        return total

    # -- conversion ---------------------------------------------------------

    def to_bigfloat(self, prec):
        prec = checked_precision(prec)
        return TruncatedSeries._raw(
            self.vars,
            self.order,
            {e: to_bigfloat(c, prec) for e, c in self.terms.items()},
            "bigfloat",
            prec,
        )

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda t: (sum(t[0]), t[0]))

    def to_json(self):
        out = {
            "vars": list(self.vars),
            "order": None if self.order == EXACT else int(self.order),
            "mode": self.mode,
        }
        terms = []
        for e, c in self.sorted_terms():
            if isinstance(c, LambdaPoly):
                raise TypeError("series with parameter-polynomial coefficients have no JSON form")
            if self.mode == "bigfloat":
                if isinstance(c, mpmath.mpc):
                    re, im = c.real, c.imag
                else:
                    re, im = c, mpmath.mpf(0)
                terms.append({"e": list(e), "re": float_to_hex(re), "im": float_to_hex(im)})
            else:
                re, im = real_imag(c)
                terms.append({"e": list(e), "re": str(re), "im": str(im)})
        if self.mode == "bigfloat":
            out["precision"] = self.precision
        out["terms"] = terms
        return out

    @classmethod
    def from_json(cls, data):
        try:
            vars = data["vars"]
            mode = data.get("mode", "exact")
            prec = data.get("precision")
            terms = {}
            for t in data["terms"]:
                if mode == "bigfloat":
                    with mpmath.workprec(prec):
                        c = mpmath.mpc(hex_to_float(t["re"], prec), hex_to_float(t.get("im", "0x0p0"), prec))
                    if not c.imag:
                        c = c.real
                else:
                    c = Gaussian.make(rational(t["re"]), rational(t.get("im", "0")))
                terms[tuple(t["e"])] = c
            return cls(vars, data.get("order"), terms, mode=mode, precision=prec)
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed series JSON: {exc}") from exc

    def __str__(self):
        if not self.terms:
            body = "0"
        else:
            pieces = []
            for e, c in self.sorted_terms():
                mono = "*".join(
                    v if k == 1 else f"{v}^{k}" for v, k in zip(self.vars, e) if k
                )
                cs = f"({c})" if isinstance(c, (Gaussian, LambdaPoly)) else str(c)
                if not mono:
                    pieces.append(cs)
                elif c == 1:
                    pieces.append(mono)
                else:
                    pieces.append(f"{cs}*{mono}")
            body = " + ".join(pieces)
        if self.order == EXACT:
            return body
        return f"{body} + O({self.order + 1})"

    def __repr__(self):
        return f"TruncatedSeries({self.vars}, order={self.order}: {self})"


def _hmul_into(acc, p, q, add):
    get = acc.get
    for ea, ca in p.items():
        for eb, cb in q.items():
            e = add(ea, eb)
            acc[e] = get(e, 0) + ca * cb
    return acc


class _NoContext:
    def __enter__(self):
        return None

    def __exit__(self, *exc):
        return False


def _precision(prec):
    return mpmath.workprec(prec) if prec else _NoContext()


class MeromorphicSeries:
    """Quotient numerator / prod(factor**power) kept symbolically.

    Equality is tested after clearing denominators, so two representations of
    the same germ compare equal even when their factor lists differ.
    """

    def __init__(self, numerator, factors=()):
        self.numerator = numerator
        self.factors = tuple((f, int(k)) for f, k in factors if k)

    def denominator(self):
        out = TruncatedSeries.constant(QQ(1), self.numerator.vars)
        for f, k in self.factors:
            out = out * f**k
        return out

    def __eq__(self, other):
        if not isinstance(other, MeromorphicSeries):
            return NotImplemented
        return self.numerator * other.denominator() == other.numerator * self.denominator()

    __hash__ = None

    def to_series(self):
        """Exact division of the numerator by the denominator, if possible."""
        return self.numerator.divide_exact(self.denominator())

    def __repr__(self):
        dens = " * ".join(f"({f})^{k}" for f, k in self.factors) or "1"
        return f"MeromorphicSeries(({self.numerator}) / {dens})"


# functional aliases mirroring the operation names used in the docs


def add(a, b):
    return a + b


def mul(a, b):
    return a * b


def invert_unit(a):
    return a.invert_unit()


def compose(a, subs, **kw):
    return a.compose(subs, **kw)


def d_dx(a, var=None):
    return a.derivative(var)


def integrate_x(a, var=None):
    return a.integrate(var)


def divide_exact(a, g):
    return a.divide_exact(g)


def restrict(a, curve):
    return a.restrict(curve)


def l1_norm_truncated(a, prec=256):
    return a.l1_norm(prec)
