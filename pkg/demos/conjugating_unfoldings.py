# Deciding whether two unfoldings with the same fixed points are conjugate,
# and building the conjugacy when they are.

from germforge.errors import NotSpecial
from germforge.experiments import named_locus
from germforge.homological import build_homological, solve_special
from germforge.liecalc import VectorField, check_conjugacy, exp_field, path_conjugation
from germforge.series import TruncatedSeries

locus = named_locus("x(x-y)")
N = 16
f = locus.f.truncate(N)

phi1 = exp_field(VectorField.up(f))
phi2 = exp_field(VectorField.up(((1 + f) * f).truncate(N)))

eq = build_homological(phi1, phi2, locus)
print("pole-free:", eq.pole_free)

sol = solve_special(eq)
print("alpha ~", sol.alpha_series().truncate(5))

sigma = path_conjugation(phi1, phi2, sol, locus, order=10)
print("sigma ~", sigma.F.truncate(5))
print("conjugates at order 10:", check_conjugacy(sigma, phi1, phi2, locus, 10))

# Now a pair that cannot be conjugated by a normalized map. The units differ
# at the origin on a locus with a double component, and the equation picks
# up a pole that no special solution absorbs.
locus = named_locus("x^2(x-y)")
f = locus.f.truncate(N)
u = TruncatedSeries.parse("2 + x + y^2", locus.vars, N)
psi1 = exp_field(VectorField.up(f))
psi2 = exp_field(VectorField.up((u * f).truncate(N)))
try:
    solve_special(build_homological(psi1, psi2, locus))
except NotSpecial as exc:
    print()
    print("not special:", exc, "| first failing equation", exc.relation)
