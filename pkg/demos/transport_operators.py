# Transport operators between fixed curves, and how they move in a
# one-parameter family phi_lambda = phi0 + lambda f^2 Delta.

import random

from germforge.experiments import named_locus, random_family
from germforge.liecalc import VectorField, exp_field
from germforge.operators import S_ab, S_ab_phi0, T_c, diffsim_witness, lambda_profile
from germforge.series import TruncatedSeries
from germforge.unfolding import lambda_coefficient

locus = named_locus("x(x-y)")
f = locus.f.truncate(14)

# the model flow transports nothing
print("S(exp f d/dx) =", S_ab(exp_field(VectorField.up(f)), 1, 1, 10).series)

phi = exp_field(VectorField.up(((1 + f) * f).truncate(14)))
print("S(exp (1+f) f d/dx) =", S_ab(phi, 1, 1, 10).series)

fam = random_family(random.Random(1), locus, 12)
print()
print("Delta =", fam.delta)

# first-order response in lambda, two ways
symbolic = lambda_coefficient(S_ab(fam.lambda_series(1), 1, 1, 8, check=False).series, 1)
linear = S_ab_phi0(fam.base, fam.delta, 1, 1, 8).series
print("dS/dlambda    =", symbolic)
print("S_phi0(Delta) =", linear)
print("agree:", symbolic == linear)

w = diffsim_witness(fam)
print("witness is a multiple of f:", w.divide_exact(locus.f).truncate(3), "+ ...")

prof = lambda_profile(fam, 6)
top = {}
for e, p in prof.unit.items():
    top[sum(e)] = max(top.get(sum(e), 0), len(p) - 1)
print("lambda-degree bounds hold:", prof.passes)
print("  max lambda-degree of the unit per total degree:", [top.get(d, 0) for d in range(7)])

# on the cusp surface only the k < j part of alpha(x, y, xy) is invariant
cusp = named_locus("cusp:1")
g = cusp.f.truncate(12)
u = TruncatedSeries.parse("1 + (z - x*y)*(1 + y)", cusp.vars, 12)
print()
print("T_1 =", T_c(exp_field(VectorField.up((u * g).truncate(12))), 1, 6).series)
