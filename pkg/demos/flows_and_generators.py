# Flows of x-directed vector fields and their generators.
#
#   python3 demos/flows_and_generators.py

from germforge.liecalc import VectorField, exp_field, log_updiffeo
from germforge.series import TruncatedSeries
from germforge.unfolding import FixedLocus, UpDiffeo, in_Df, in_Df_prime

line = ("x",)

# x' = x^2 has the flow x / (1 - t x); the Lie series should reproduce it
phi = exp_field(VectorField.up(TruncatedSeries.parse("x^2", line, 10)))
print("exp(x^2 d/dx):", phi.F)

# and the generator of x + x^2 comes out by undetermined coefficients
gen = log_updiffeo(UpDiffeo(TruncatedSeries.parse("x + x^2", line, 8)))
print("log(x + x^2): ", gen.x_component)

# with a parameter: fixed points along x = 0 and x = y
locus = FixedLocus.monomial_pair(1, 1)
u = TruncatedSeries.parse("1 + y - x*y", locus.vars, 10)
phi = exp_field(VectorField.up((u * locus.f).truncate(10)))

print()
print("f =", locus.f)
print("in D_f: ", bool(in_Df(phi, locus)))
print("in D_f':", bool(in_Df_prime(phi, locus)))  # u is not 1 mod f

X = log_updiffeo(phi)
print("log recovers u f:", X.x_component == (u * locus.f).truncate(10))
