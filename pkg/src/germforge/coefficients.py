"""Coefficient rings used by the series kernel.

Rationals are ``gmpy2.mpq``. ``Gaussian`` adds an imaginary part and collapses
back to ``mpq`` whenever the imaginary part vanishes, so purely rational
computations never pay for complex arithmetic. ``LambdaPoly`` is a truncated
polynomial ring in an auxiliary parameter; it is how family parameters (and
the path parameter of the conjugation flow) ride along inside a series.
"""

from __future__ import annotations

import re
from fractions import Fraction
from numbers import Rational

import gmpy2
import mpmath

QQ = gmpy2.mpq
_MPQ = type(QQ(0))
_SCALARS = (int, _MPQ, Fraction)


def rational(value) -> _MPQ:
    """Coerce ints, strings like ``"3/2"``, Fractions and mpq to mpq."""
    if isinstance(value, _MPQ):
        return value
    if isinstance(value, str):
        return QQ(value.strip())
    if isinstance(value, (int, Rational)):
        return QQ(value.numerator, value.denominator)
    raise TypeError(f"cannot read {value!r} as an exact rational")


class Gaussian:
    """Element re + i*im of Q(i) with a nonzero imaginary part."""

    __slots__ = ("im", "re")

    def __init__(self, re, im):
        self.re = rational(re)
        self.im = rational(im)

    @staticmethod
    def make(re, im):
        im = rational(im)
        if not im:
            return rational(re)
        return Gaussian(re, im)

    def _parts(self, other):
        if isinstance(other, Gaussian):
            return other.re, other.im
        if isinstance(other, _SCALARS):
            return rational(other), None
        return None, None

    def __add__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        return Gaussian.make(self.re + r, self.im + (i or 0))

    __radd__ = __add__

    def __neg__(self):
        return Gaussian(-self.re, -self.im)

    def __sub__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        return Gaussian.make(self.re - r, self.im - (i or 0))

    def __rsub__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        return Gaussian.make(r - self.re, (i or 0) - self.im)

    def __mul__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        if i is None:
            return Gaussian.make(self.re * r, self.im * r)
        return Gaussian.make(self.re * r - self.im * i, self.re * i + self.im * r)

    __rmul__ = __mul__

    def norm2(self):
        return self.re * self.re + self.im * self.im

    def conjugate(self):
        return Gaussian(self.re, -self.im)

    def __truediv__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        if i is None:
            return Gaussian.make(self.re / r, self.im / r)
        return self * Gaussian(r, -i) / (r * r + i * i)

    def __rtruediv__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        return Gaussian.make(r, i or 0) * self.conjugate() / self.norm2()

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        r, i = self._parts(other)
        if r is None:
            return NotImplemented
        return self.re == r and self.im == (i or 0)

    def __hash__(self):
        return hash((self.re, self.im))

    def __repr__(self):
        return f"Gaussian({self.re}, {self.im})"


class LambdaPoly:
    """Polynomial in an auxiliary parameter, truncated above degree ``cap``.

    ``coeffs[k]`` is the coefficient of lambda**k. Trailing zeros are dropped.
    Mixing two caps keeps the smaller one, mirroring the order rule of series.
    """

    __slots__ = ("cap", "coeffs")

    def __init__(self, coeffs, cap: int):
        coeffs = list(coeffs[: cap + 1])
        while coeffs and not coeffs[-1]:
            coeffs.pop()
        self.coeffs = tuple(coeffs)
        self.cap = cap

    @classmethod
    def constant(cls, value, cap):
        return cls((value,), cap)

    @classmethod
    def monomial(cls, degree, cap, value=1):
        return cls((0,) * degree + (value,), cap)

    def coefficient(self, k: int):
        return self.coeffs[k] if 0 <= k < len(self.coeffs) else QQ(0)

    @property
    def degree(self) -> int:
        """Highest lambda-power present, -1 for zero."""
        return len(self.coeffs) - 1

    def _lift(self, other):
        if isinstance(other, LambdaPoly):
            return other
        return LambdaPoly((other,), self.cap)

    def __add__(self, other):
        other = self._lift(other)
        a, b = self.coeffs, other.coeffs
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, c in enumerate(b):
            out[k] = out[k] + c
        return LambdaPoly(out, min(self.cap, other.cap))

    __radd__ = __add__

    def __neg__(self):
        return LambdaPoly([-c for c in self.coeffs], self.cap)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) + (-self)

    def __mul__(self, other):
        if not isinstance(other, LambdaPoly):
            if not other:
                return LambdaPoly((), self.cap)
            return LambdaPoly([c * other for c in self.coeffs], self.cap)
        cap = min(self.cap, other.cap)
        a, b = self.coeffs, other.coeffs
        if not a or not b:
            return LambdaPoly((), cap)
        out = [0] * min(len(a) + len(b) - 1, cap + 1)
        top = len(out)
        for i, ca in enumerate(a):
            if i >= top:
                break
            for j, cb in enumerate(b[: top - i]):
                out[i + j] += ca * cb
        return LambdaPoly(out, cap)

    __rmul__ = __mul__

    def inverse(self):
        if not self.coeffs or not self.coeffs[0]:
            raise ZeroDivisionError("LambdaPoly with zero constant term is not invertible")
        a = self.coeffs
        inv0 = QQ(1) / a[0]
        out = [inv0]
        for k in range(1, self.cap + 1):
            acc = 0
            for i in range(1, min(k, len(a) - 1) + 1):
                acc += a[i] * out[k - i]
            out.append(-acc * inv0)
        return LambdaPoly(out, self.cap)

    def __truediv__(self, other):
        if isinstance(other, LambdaPoly):
            return self * other.inverse()
        if isinstance(other, int):
            other = QQ(other)
        return LambdaPoly([c / other for c in self.coeffs], self.cap)

    def __rtruediv__(self, other):
        return self.inverse() * other

    def derivative(self):
        """d/dlambda; the top coefficient becomes unknown, so the cap drops by one."""
        return LambdaPoly([k * c for k, c in enumerate(self.coeffs)][1:], self.cap - 1)

    def evaluate(self, value):
        acc = QQ(0)
        for c in reversed(self.coeffs):
            acc = acc * value + c
        return acc

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, LambdaPoly):
            n = min(self.cap, other.cap) + 1
            return self.coeffs[:n] == other.coeffs[:n]
        if isinstance(other, (*_SCALARS, Gaussian)):
            return self.coeffs == ((other,) if other else ())
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        return f"LambdaPoly({list(map(str, self.coeffs))}, cap={self.cap})"


def real_imag(c):
    """Split an exact coefficient into rational real and imaginary parts."""
    if isinstance(c, Gaussian):
        return c.re, c.im
    return rational(c), QQ(0)


def coefficient_abs(c, prec: int):
    """|c| as an mpmath float carrying ``prec`` bits."""
    with mpmath.workprec(prec):
        if isinstance(c, Gaussian):
            return mpmath.sqrt(_to_mpf(c.re) ** 2 + _to_mpf(c.im) ** 2)
        if isinstance(c, (mpmath.mpf, mpmath.mpc)):
            return abs(c)
        return abs(_to_mpf(rational(c)))


def _to_mpf(q):
    return mpmath.mpf(int(q.numerator)) / int(q.denominator)


def to_bigfloat(c, prec: int):
    with mpmath.workprec(prec):
        if isinstance(c, Gaussian):
            return mpmath.mpc(_to_mpf(c.re), _to_mpf(c.im))
        if isinstance(c, (mpmath.mpf, mpmath.mpc)):
            return +c
        return _to_mpf(rational(c))


_HEX = re.compile(r"^\s*(-?)0x([0-9a-f]+)p(-?\d+)\s*$")


def float_to_hex(value) -> str:
    """Lossless hex-float text for an mpmath real: integer mantissa, binary exponent."""
    if not isinstance(value, mpmath.mpf):
        value = mpmath.mpf(value)
    sign, man, exp, _ = value._mpf_
    if not man:
        return "0x0p0"
    return f"{'-' if sign else ''}0x{int(man):x}p{int(exp)}"


def hex_to_float(text: str, prec: int):
    m = _HEX.match(text.lower())
    if not m:
        raise ValueError(f"not a hex float: {text!r}")
    sign, man, exp = m.groups()
    man = int(man, 16)
    with mpmath.workprec(max(prec, man.bit_length())):
        value = mpmath.ldexp(mpmath.mpf(-man if sign else man), int(exp))
    return value
