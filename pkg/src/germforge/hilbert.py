"""Hilbert matrices, their inverse norms, and coefficient reconstruction from functionals.

A series v in (x, y) defines functionals L_{2,j} whose values on the
monomials x^t determine the antidiagonal coefficient vectors of v through a
Hilbert linear system; bounds on the functionals then bound the coefficients.
The three-variable version does the same for the k < j extraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath

from .coefficients import QQ, coefficient_abs, rational
from .config import checked_precision, default_precision
from .errors import InputError, StabilizationFailure
from .homological import BOUNDED, GROWING, INCONCLUSIVE, growth_verdict
from .series import EXACT, TruncatedSeries

POWER_ITERATION_CAP = 5000
DEFAULT_SLACK = 2


# -- exact matrices ---------------------------------------------------------------


def hilbert_matrix(k: int):
    """(k+1) x (k+1) matrix with entries 1/(a+b-1), a, b = 1..k+1."""
    if k < 0:
        raise InputError("k must be non-negative")
    n = k + 1
    return [[QQ(1, a + b + 1) for b in range(n)] for a in range(n)]


def matmul(A, B):
    return [[sum((a * b for a, b in zip(row, col)), QQ(0)) for col in zip(*B)] for row in A]


def identity(n):
    return [[QQ(int(i == j)) for j in range(n)] for i in range(n)]


def exact_inverse(M):
    """Gauss-Jordan elimination over the rationals."""
    n = len(M)
    aug = [list(map(rational, row)) + identity(n)[i] for i, row in enumerate(M)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col]), None)
        if piv is None:
            raise ZeroDivisionError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = QQ(1) / aug[col][col]
        aug[col] = [c * inv for c in aug[col]]
        for r in range(n):
            if r != col and aug[r][col]:
                c = aug[r][col]
                aug[r] = [a - c * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def hilbert_inverse(k: int, *, check=True):
    """Exact inverse, verified by multiplication when ``check`` is set."""
    H = hilbert_matrix(k)
    inv = exact_inverse(H)
    if check and matmul(H, inv) != identity(k + 1):
        raise ArithmeticError("Hilbert inverse failed the product check")
    return inv


def hilbert_inverse_closed_form(k: int):
    """Binomial formula for the inverse entries, used as an independent oracle."""
    n = k + 1
    C = math.comb
    return [
        [
            QQ((-1) ** (i + j) * (i + j + 1) * C(n + i, n - j - 1) * C(n + j, n - i - 1) * C(i + j, i) ** 2)
            for j in range(n)
        ]
        for i in range(n)
    ]


def ldl_pivots(M):
    """Pivots of the exact LDL^T factorization; all positive iff M is positive definite."""
    n = len(M)
    A = [list(map(rational, row)) for row in M]
    pivots = []
    for i in range(n):
        d = A[i][i]
        pivots.append(d)
        if not d:
            break
        for r in range(i + 1, n):
            c = A[r][i] / d
            for s in range(i + 1, n):
                A[r][s] -= c * A[i][s]
    return pivots


def is_positive_definite(M):
    return all(p > 0 for p in ldl_pivots(M))


# -- spectral norms ----------------------------------------------------------------


@dataclass
class SpectralNorm:
    value: object
    residual: object
    iterations: int
    precision: int


def _to_mp(M):
    return mpmath.matrix([[mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in row] for row in M])


def spectral_norm(M, precision=None, *, tol_bits=None, cap=POWER_ITERATION_CAP) -> SpectralNorm:
    """Largest |eigenvalue| of a symmetric matrix by power iteration.

    Starts from the all-ones vector and restarts from e_0, e_1, ... when an
    attempt stagnates. The residual |M x - lambda x| / |x| bounds the distance
    from lambda to the spectrum; iteration stops once it is below
    2^-tol_bits relative to lambda.
    """
    prec = checked_precision(default_precision() if precision is None else precision)
    n = len(M)
    if any(M[i][j] != M[j][i] for i in range(n) for j in range(i)):
        raise InputError("spectral_norm expects a symmetric matrix")
    tol_bits = prec - 16 if tol_bits is None else tol_bits
    with mpmath.workprec(prec + 32):
        A = _to_mp(M)
        starts = [mpmath.matrix([1] * n)]
        for i in range(n):
            e = mpmath.matrix([0] * n)
            e[i] = 1
            starts.append(e)
        tol = mpmath.ldexp(1, -tol_bits)
        used = 0
        best = None
        for x in starts:
            x = x / mpmath.norm(x)
            lam, resid = mpmath.mpf(0), mpmath.inf
            for _ in range(cap):
                used += 1
                y = A * x
                lam = (x.T * y)[0]
                resid = mpmath.norm(y - lam * x)
                if resid <= tol * abs(lam):
                    break
                ny = mpmath.norm(y)
                if not ny:
                    break
                x = y / ny
            if resid <= tol * abs(lam) and (best is None or abs(lam) > best[0]):
                best = (abs(lam), resid)
                break
        if best is None:
            raise StabilizationFailure("power iteration did not converge")
    with mpmath.workprec(prec):
        return SpectralNorm(+best[0], +best[1], used, prec)


def characteristic_polynomial(M):
    """Exact coefficients (highest degree first) by the Faddeev-LeVerrier recursion."""
    n = len(M)
    coeffs = [QQ(1)]
    Mk = identity(n)
    for k in range(1, n + 1):
        AM = matmul(M, Mk)
        c = -sum((AM[i][i] for i in range(n)), QQ(0)) / k
        coeffs.append(c)
        Mk = [[AM[i][j] + (c if i == j else 0) for j in range(n)] for i in range(n)]
    return coeffs


def eigen_oracle_norm(M, precision=None):
    """Largest |root| of the exact characteristic polynomial; meant for small matrices."""
    prec = default_precision() if precision is None else precision
    coeffs = characteristic_polynomial(M)
    with mpmath.workprec(prec + 64):
        roots = mpmath.polyroots(
            [mpmath.mpf(int(c.numerator)) / int(c.denominator) for c in coeffs],
            maxsteps=400,
            extraprec=4 * prec,
        )
        top = max(abs(r) for r in roots)
    with mpmath.workprec(prec):
        return +top


def kalyabin_constants(precision=None):
    """(rho, K) = (1 + sqrt 2, 8 pi^(3/2) 2^(3/4) / rho^4)."""
    prec = default_precision() if precision is None else precision
    with mpmath.workprec(prec):
        rho = 1 + mpmath.sqrt(2)
        K = 8 * mpmath.pi ** mpmath.mpf(1.5) * mpmath.mpf(2) ** mpmath.mpf(0.75) / rho**4
        return rho, K


def kalyabin_ratio(k: int, precision=None):
    """|Hilb_k^(-1)|_2 * K sqrt(k) / rho^(4k); tends to 1."""
    if k < 1:
        raise InputError("the ratio needs k >= 1")
    prec = checked_precision(default_precision() if precision is None else precision)
    norm = spectral_norm(hilbert_inverse(k), prec)
    rho, K = kalyabin_constants(prec)
    with mpmath.workprec(prec):
        return norm.value * K * mpmath.sqrt(k) / rho ** (4 * k), norm


@dataclass
class HilbertReport:
    k: int
    matrix: list
    inverse: list
    spectral_norm_inv: object
    residual: object
    kalyabin_ratio: object
    precision: int

    def row(self, digits=30):
        return {
            "k": self.k,
            "norm": mpmath.nstr(self.spectral_norm_inv, digits),
            "ratio": mpmath.nstr(self.kalyabin_ratio, digits),
            "residual": mpmath.nstr(self.residual, 5),
        }


def hilbert_report(k: int, precision=None) -> HilbertReport:
    prec = checked_precision(default_precision() if precision is None else precision)
    H = hilbert_matrix(k)
    inv = hilbert_inverse(k)
    ratio, norm = kalyabin_ratio(k, prec)
    return HilbertReport(k, H, inv, norm.value, norm.residual, ratio, prec)


# -- functionals ---------------------------------------------------------------------


def _coeff(v, e):
    return v.coefficient(e)


def L2_functional(v: TruncatedSeries, j: int, monomial):
    """Coefficient of y^j in L2^v(x^k y^l): sum_{m+n=j-k-l-1} v_mn / (m+k+1)."""
    k, l = monomial
    s = j - k - l - 1
    if s < 0:
        return QQ(0)
    return sum((_coeff(v, (m, s - m)) * QQ(1, m + k + 1) for m in range(s + 1)), QQ(0))


def L3_functional(v: TruncatedSeries, A: int, B: int, monomial):
    """Coefficient of x^A y^B in L3^v(x^p y^q z^r)."""
    p, q, r = monomial
    total = QQ(0)
    # v_{j,k,l} x^{j+p+1} y^{k+q} z^{l+r} / (j+p+1) lands on x^{j+p+1+l+r} y^{k+q+l+r}
    for l in range(max(B - q - r, 0) + 1):
        j = A - p - 1 - l - r
        k = B - q - l - r
        if j < 0 or k < 0:
            continue
        if k + q < j + p + 1:
            total += _coeff(v, (j, k, l)) * QQ(1, j + p + 1)
    return total


def _abs(c, prec):
    return coefficient_abs(c, prec)


def L2_norm(v, j, precision=None):
    """Max over monomials x^k y^l with k + l < j of |L_{2,j}(x^k y^l)|."""
    prec = default_precision() if precision is None else precision
    best = mpmath.mpf(0)
    for d in range(j):
        for k in range(d + 1):
            best = max(best, _abs(L2_functional(v, j, (k, d - k)), prec))
    return best


def L3_norm(v, A, B, precision=None):
    """Max over monomials x^p y^q z^r of |coefficient of x^A y^B| in L3(x^p y^q z^r)."""
    prec = default_precision() if precision is None else precision
    best = mpmath.mpf(0)
    for p in range(A):
        for q in range(B + 1):
            for r in range(min(A - 1 - p, B - q) + 1):
                best = max(best, _abs(L3_functional(v, A, B, (p, q, r)), prec))
    return best


@dataclass
class FunctionalNorms:
    mode: str
    norms: dict
    roots: dict
    C: object
    verdict: str
    window: int

    def to_json(self):
        return {
            "mode": self.mode,
            "window": self.window,
            "C": mpmath.nstr(self.C, 30),
            "verdict": self.verdict,
            "norms": [
                {"index": list(key) if isinstance(key, tuple) else key, "norm": mpmath.nstr(n, 30), "root": mpmath.nstr(self.roots[key], 30)}
                for key, n in sorted(self.norms.items(), key=lambda t: (t[0],) if not isinstance(t[0], tuple) else t[0])
            ],
        }


def functional_norms(v: TruncatedSeries, mode="L2", window=None, precision=None, threshold=None) -> FunctionalNorms:
    """Norms of the graded functionals and the reconstructed constant C.

    L2: C = max(1, max_j |L_{2,j}|^(1/j)) over j = 1..window.
    L3: C = max(1, max_{k<j} |L_{3,j,k}|^(1/(j+k))) over j + k <= window.
    The verdict is the shared root-test policy applied to the per-degree
    maxima of the roots.
    """
    prec = default_precision() if precision is None else precision
    top = v.order + 1 if window is None else window
    if v.order != EXACT:
        top = min(top, int(v.order) + 1)
    norms, roots = {}, {}
    per_degree = []
    with mpmath.workprec(prec):
        if mode == "L2":
            for j in range(1, top + 1):
                n = L2_norm(v, j, prec)
                norms[j] = n
                roots[j] = mpmath.root(n, j) if n else mpmath.mpf(0)
                per_degree.append(roots[j])
        elif mode == "L3":
            for d in range(1, top + 1):
                best = mpmath.mpf(0)
                for k in range((d - 1) // 2 + 1):
                    j = d - k
                    if k >= j:
                        continue
                    n = L3_norm(v, j, k, prec)
                    norms[(j, k)] = n
                    roots[(j, k)] = mpmath.root(n, d) if n else mpmath.mpf(0)
                    best = max(best, roots[(j, k)])
                per_degree.append(best)
        else:
            raise InputError("mode must be L2 or L3")
        C = max([mpmath.mpf(1)] + list(roots.values()))
    kw = {} if threshold is None else {"threshold": threshold}
    return FunctionalNorms(mode, norms, roots, C, growth_verdict(per_degree, **kw), top)


# -- reconstruction ---------------------------------------------------------------------


def solve_exact(M, rhs):
    inv = exact_inverse(M)
    return [sum((a * b for a, b in zip(row, rhs)), QQ(0)) for row in inv]


def reconstruct_antidiagonal(v: TruncatedSeries, k: int):
    """(v_{0,k}, ..., v_{k,0}) from the functional values L_{2,k+1+t}(x^t)."""
    rhs = [L2_functional(v, k + 1 + t, (t, 0)) for t in range(k + 1)]
    return solve_exact(hilbert_matrix(k), rhs)


def reconstruct_triple(v: TruncatedSeries, a: int, b: int):
    """Coefficients v_{j,k,l} with j + l = a, k + l = b from the shifted system.

    With d = max(b - a, 0) the unknowns are indexed by i = 0..a+d as
    v_{i-d, b-a-d+i, a+d-i} (negative subindices mean zero) and the right-hand
    sides are the x^(a+d+1+t) y^b coefficients of L3(x^(d+t)).
    """
    d = max(b - a, 0)
    size = a + d
    rhs = [L3_functional(v, a + d + 1 + t, b, (d + t, 0, 0)) for t in range(size + 1)]
    sol = solve_exact(hilbert_matrix(size), rhs)
    out = {}
    for i, c in enumerate(sol):
        idx = (i - d, b - a - d + i, a + d - i)
        if min(idx) >= 0:
            out[idx] = c
        elif c:
            raise ArithmeticError(f"nonzero value reconstructed at impossible index {idx}")
    return out


@dataclass
class BoundCheck:
    mode: str
    C: object
    slack: object
    radius: object
    reconstructed_ok: bool
    violations: list = field(default_factory=list)
    rows: list = field(default_factory=list)

    @property
    def passes(self):
        return self.reconstructed_ok and not self.violations

    def to_json(self):
        return {
            "type": "bound_check",
            "mode": self.mode,
            "C": mpmath.nstr(self.C, 30),
            "slack": str(self.slack),
            "radius": mpmath.nstr(self.radius, 30),
            "reconstructed": self.reconstructed_ok,
            "verdict": "PASS" if self.passes else "FAIL",
            "violations": [list(map(str, v)) for v in self.violations],
            "rows": self.rows,
        }


def mosiop2_bound(k, C, slack, precision=None):
    """rho^(4k)/(K sqrt k) * sqrt(k+1) * C^(2k+1) * slack, and C for k = 0."""
    rho, K = kalyabin_constants(precision)
    if k == 0:
        return C
    return rho ** (4 * k) / (K * mpmath.sqrt(k)) * mpmath.sqrt(k + 1) * C ** (2 * k + 1) * slack


def mosiop3_bound(n, C, slack, precision=None):
    """C (rho^4 C^3)^n / K * slack for j + k + l = n."""
    rho, K = kalyabin_constants(precision)
    return C * (rho**4 * C**3) ** n / K * slack


def coefficient_bound_check(v: TruncatedSeries, C=None, window=None, *, mode="L2", slack=DEFAULT_SLACK, precision=None) -> BoundCheck:
    """Rebuild every antidiagonal from functionals and test the coefficient bounds.

    Reports every violating index rather than raising.
    """
    prec = default_precision() if precision is None else precision
    N = int(v.order) if v.order != EXACT else v.degree()
    window = N if window is None else min(window, N)
    slack = rational(slack)
    with mpmath.workprec(prec):
        sl = mpmath.mpf(int(slack.numerator)) / int(slack.denominator)
        if C is None:
            C = functional_norms(v, mode, window + 1, prec).C
        elif not isinstance(C, mpmath.mpf):
            C = rational(C)
            C = mpmath.mpf(int(C.numerator)) / int(C.denominator)
        if C < 1:
            raise InputError("C must be at least 1")
        rho, _ = kalyabin_constants(prec)
        ok = True
        violations, rows = [], []
        if mode == "L2":
            radius = 1 / (rho**4 * C**2)
            for k in range(window + 1):
                vec = reconstruct_antidiagonal(v, k)
                truth = [v.coefficient((m, k - m)) for m in range(k + 1)]
                ok = ok and vec == truth
                bound = mosiop2_bound(k, C, sl, prec)
                worst = max(coefficient_abs(c, prec) for c in vec)
                rows.append({"antidiagonal": k, "max_abs": mpmath.nstr(worst, 20), "bound": mpmath.nstr(bound, 20)})
                for m, c in enumerate(vec):
                    if coefficient_abs(c, prec) > bound:
                        violations.append((m, k - m))
        elif mode == "L3":
            radius = 1 / (rho**4 * C**3)
            for a in range(window + 1):
                for b in range(window + 1 - a):
                    got = reconstruct_triple(v, a, b)
                    for idx, c in got.items():
                        if sum(idx) > window:
                            continue
                        ok = ok and c == v.coefficient(idx)
                        if coefficient_abs(c, prec) > mosiop3_bound(sum(idx), C, sl, prec):
                            violations.append(idx)
            for n in range(window + 1):
                rows.append({"degree": n, "bound": mpmath.nstr(mosiop3_bound(n, C, sl, prec), 20)})
        else:
            raise InputError("mode must be L2 or L3")
    return BoundCheck(mode, C, slack, radius, ok, sorted(set(violations)), rows)


__all__ = [
    "BOUNDED",
    "GROWING",
    "INCONCLUSIVE",
    "BoundCheck",
    "FunctionalNorms",
    "HilbertReport",
    "SpectralNorm",
    "characteristic_polynomial",
    "coefficient_bound_check",
    "eigen_oracle_norm",
    "exact_inverse",
    "functional_norms",
    "hilbert_inverse",
    "hilbert_inverse_closed_form",
    "hilbert_matrix",
    "hilbert_report",
    "is_positive_definite",
    "kalyabin_constants",
    "kalyabin_ratio",
    "reconstruct_antidiagonal",
    "reconstruct_triple",
    "spectral_norm",
]
