# Hilbert matrices give the inverse problem behind the coefficient bounds,
# and root tests give a (heuristic) read on divergence.

import math

import mpmath

from germforge.coefficients import QQ
from germforge.experiments import perturbation_growth
from germforge.hilbert import coefficient_bound_check, hilbert_report
from germforge.operators import L2
from germforge.series import TruncatedSeries

mpmath.mp.prec = 256

print(" k   |Hilb_k^-1|_2              ratio")
for k in range(1, 13):
    r = hilbert_report(k, 256)
    print(f"{k:2d}   {mpmath.nstr(r.spectral_norm_inv, 20):>24}   {mpmath.nstr(r.kalyabin_ratio, 8)}")

XY = ("x", "y")
v = (TruncatedSeries.constant(QQ(1), XY, 12) - TruncatedSeries.parse("x + y", XY)).invert_unit()
check = coefficient_bound_check(v, window=12)
print()
print("1/(1-x-y): rebuilt exactly", check.reconstructed_ok, "| bounds hold", check.passes,
      "| C", mpmath.nstr(check.C, 6), "| radius", mpmath.nstr(check.radius, 6))

N = 27
fact = TruncatedSeries(XY, N, {(k, 0): QQ(math.factorial(k)) for k in range(N + 1)})
rep = L2(fact, TruncatedSeries.parse("1", XY), N).root_test(25)
print("L2 of sum k! x^k:", rep.verdict, "| last roots",
      [mpmath.nstr(r, 4) for r in rep.roots[-4:]])

# The roots creep up slowly (about sqrt of the degree) and dip every fourth
# degree, so the verdict uses maxima over blocks of 4. Below order ~250 they
# have not yet crossed the threshold of 4. Takes ten seconds or so.
res = perturbation_growth(0)
print()
print("perturbed generator on y = 0, seed 0:", res.verdict,
      "(per degree:", res.report.per_degree_verdict + ")")
print("roots every 30 degrees:", [mpmath.nstr(r, 3) for r in res.report.roots[29::30]])
