"""Seeded random instances and the named experiments the command line runs.

Everything here is deterministic in its seed: the generator is
``random.Random(seed)`` and no wall-clock or environment data enters a result.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .coefficients import QQ
from .homological import GROWING, root_test
from .liecalc import VectorField, exp_field, log_updiffeo
from .series import TruncatedSeries
from .unfolding import FixedLocus, PolynomialFamily, UpDiffeo, in_Df_prime

PERTURB_ORDER = 300
PERTURB_BLOCK = 4
PERTURB_SEEDS = 10
PERTURB_REQUIRED = 8


def named_locus(name: str) -> FixedLocus:
    """x^2, x(x-y), x^2(x-y), (z-xy)^2 and friends from short names.

    Accepted: ``x^a`` (with a dummy parameter y), ``pair:a,b`` for
    x^a (x-y)^b and ``cusp:c`` for (z - x y)^c.
    """
    name = name.strip().replace(" ", "")
    if name.startswith("pair:"):
        a, b = (int(t) for t in name[5:].split(","))
        return FixedLocus.monomial_pair(a, b) if b else FixedLocus(("x", "y"), [("x", a)])
    if name.startswith("cusp:"):
        return FixedLocus.cusp(int(name[5:]))
    aliases = {
        "x^2": "pair:2,0",
        "x(x-y)": "pair:1,1",
        "x^2(x-y)": "pair:2,1",
        "(z-xy)^2": "cusp:2",
        "(z-x*y)^2": "cusp:2",
    }
    if name in aliases:
        return named_locus(aliases[name])
    raise ValueError(f"unknown locus name {name!r}")


CRITERION_LOCI = ("x^2", "x(x-y)", "x^2(x-y)", "(z-xy)^2")


def random_rational(rng, span=5, den=4):
    return QQ(rng.randint(-span, span), rng.randint(1, den))


def random_polynomial(rng, vars, degree, *, span=5, den=4, density=1.0, order=None):
    terms = {}
    n = len(vars)

    def exps(d, k):
        if k == 1:
            yield (d,)
            return
        for a in range(d, -1, -1):
            for rest in exps(d - a, k - 1):
                yield (a,) + rest

    for d in range(degree + 1):
        for e in exps(d, n):
            if rng.random() <= density:
                c = random_rational(rng, span, den)
                if c:
                    terms[e] = c
    return TruncatedSeries(vars, order, terms)


def random_unit(rng, vars, degree=3, order=None):
    """A polynomial with a nonzero rational constant term."""
    p = random_polynomial(rng, vars, degree, order=order)
    c0 = QQ(rng.choice([1, 2, 3, -1, -2]), rng.randint(1, 3))
    zero = (0,) * len(vars)
    terms = dict(p.terms)
    terms[zero] = c0
    return TruncatedSeries(vars, order, terms)


def random_family(rng, locus: FixedLocus, order: int, *, degree=2):
    """phi0 = exp(u0 f d/dx) with u0 = 1 + f q, Delta random; phi0 lies in D_f'."""
    vars = locus.vars
    q = random_polynomial(rng, vars, degree - 1, order=order)
    u0 = (1 + locus.f * q).truncate(order)
    phi0 = exp_field(VectorField.up((u0 * locus.f).truncate(order)))
    delta = random_polynomial(rng, vars, degree, order=order)
    return PolynomialFamily(phi0, locus, delta, check=False)


@dataclass
class PerturbationResult:
    seed: int
    perturbation: TruncatedSeries
    in_Df_prime: bool
    report: object

    @property
    def verdict(self):
        return self.report.verdict

    def to_json(self):
        data = self.report.to_json()
        data["degrees"] = data["degrees"][-12:]
        return {
            "seed": self.seed,
            "perturbation": self.perturbation.to_json(),
            "in_Df_prime": self.in_Df_prime,
            "report_tail": data,
        }


def perturbation_growth(seed: int, *, order=PERTURB_ORDER, block=PERTURB_BLOCK, threshold=None, precision=None):
    """Root test of the generator of exp(f d/dx) + f^2 p on the slice y = 0.

    f = x^2 (x - y) and p is a seeded random polynomial of degree 3. The
    parameter y is fixed by every map, so setting y = 0 commutes with taking
    the generator; the slice is a one-variable computation that reaches high
    order cheaply.
    """
    rng = random.Random(seed)
    locus = named_locus("x^2(x-y)")
    p = random_polynomial(rng, locus.vars, 3, span=9, den=1)
    member = bool(in_Df_prime(_perturbed(locus, p, 10), locus))
    line = ("x",)
    x = TruncatedSeries.variable("x", line)
    slice_map = {"x": x, "y": TruncatedSeries.zero(line)}
    f0 = locus.f.restrict(slice_map).truncate(order)
    base = exp_field(VectorField.up(f0), order=order)
    F = base.F + (f0 * f0 * p.restrict(slice_map)).truncate(order)
    gen = log_updiffeo(UpDiffeo(F)).x_component
    report = root_test(
        gen, (1, order), component="generator|y=0", threshold=threshold, precision=precision, block=block
    )
    return PerturbationResult(seed, p, member, report)


def _perturbed(locus, p, order):
    base = exp_field(VectorField.up(locus.f.truncate(order)))
    return UpDiffeo(base.F + (locus.f * locus.f * p).truncate(order))


def perturb_diagnose(seed=0, count=PERTURB_SEEDS, **kw):
    """Runs seeds seed, seed+1, ...; returns (results, number reported GROWING)."""
    results = [perturbation_growth(seed + i, **kw) for i in range(count)]
    return results, sum(r.verdict == GROWING for r in results)


BUNDLED_MAPS = {
    "exp_f.json": ("x(x-y)", "1", 16),
    "exp_unit.json": ("x(x-y)", "1 + x*(x-y)", 16),
    "exp_cusp.json": ("cusp:1", "1 + (z-x*y)", 12),
}


def bundled_map(name):
    """exp(u f d/dx) for the bundled data files, rebuilt from their recipe."""
    locus_name, unit, order = BUNDLED_MAPS[name]
    locus = named_locus(locus_name)
    u = TruncatedSeries.parse(unit, locus.vars, order)
    return exp_field(VectorField.up((u * locus.f).truncate(order)))
