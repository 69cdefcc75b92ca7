"""Command line driver: ``germforge <experiment> [flags]``.

Inputs are JSON files in the interchange format, inline JSON, or (for plain
series) expressions such as ``"1/(1-x-y)"``. Outputs are JSON with sorted
keys or CSV, identical across runs with the same inputs and seed. Exit
status: 0 when every checked property holds, 1 when one fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from importlib import resources
from pathlib import Path

import mpmath

from . import __version__
from .config import PRECISION_ENV, checked_precision, default_precision
from .errors import GermforgeError, InputError, NotSpecial, VariableMismatch
from .experiments import (
    PERTURB_BLOCK,
    PERTURB_ORDER,
    PERTURB_REQUIRED,
    PERTURB_SEEDS,
    named_locus,
    perturb_diagnose,
    random_family,
)
from .hilbert import coefficient_bound_check, functional_norms, hilbert_report
from .homological import (
    DEFAULT_GROWTH_THRESHOLD,
    FAIL,
    PASS,
    build_homological,
    root_test,
    solve_special,
)
from .liecalc import (
    VectorField,
    check_conjugacy,
    exp_field,
    log_updiffeo,
    path_conjugation,
)
from .operators import L2, L3, S_ab, T_c, lambda_profile
from .series import TruncatedSeries
from .unfolding import FixedLocus, PolynomialFamily, UpDiffeo

EXIT_PASS, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


# -- input handling ----------------------------------------------------------------


def _load_json_text(text, what):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def load_json(ref: str, what="input"):
    """Inline JSON, a file path, or the name of a bundled data file."""
    ref = ref.strip()
    if ref.startswith("{"):
        return _load_json_text(ref, what)
    path = Path(ref)
    if path.exists():
        return _load_json_text(path.read_text(), str(path))
    bundled = resources.files("germforge") / "data" / ref
    if bundled.is_file():
        return _load_json_text(bundled.read_text(), ref)
    raise InputError(f"{what}: no such file or bundled data {ref!r}")


def load_series(ref: str, vars, order):
    if ref.strip().startswith("{") or Path(ref).exists() or ref.endswith(".json"):
        s = TruncatedSeries.from_json(load_json(ref, "series"))
    else:
        try:
            s = TruncatedSeries.parse(ref, tuple(vars), order)
        except (SyntaxError, ValueError, KeyError) as exc:
            raise InputError(f"cannot parse series {ref!r}: {exc}") from exc
    return s.truncate(order) if order is not None else s


def load_updiffeo(ref: str, order=None):
    data = load_json(ref, "map")
    if data.get("type") == "field":
        phi = exp_field(VectorField.from_json(data), order=order)
    else:
        phi = UpDiffeo.from_json(data)
    return phi.truncate(order) if order is not None else phi


def load_locus(ref: str):
    try:
        return named_locus(ref)
    except ValueError:
        return FixedLocus.from_json(load_json(ref, "locus"))


# -- output ------------------------------------------------------------------------


def emit(args, payload, csv_text=None):
    if args.format == "csv" and csv_text is not None:
        text = csv_text
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def header(args, name, **extra):
    data = {"experiment": name, "order": args.order, "seed": args.seed, "version": __version__}
    data.update(extra)
    return data


def _csv(rows, fields):
    out = [",".join(fields)]
    for r in rows:
        out.append(",".join(str(r[f]) for f in fields))
    return "\n".join(out) + "\n"


def _series_csv(series):
    rows = [{"exponents": " ".join(map(str, e)), "coefficient": str(c)} for e, c in series.sorted_terms()]
    return _csv(rows, ["exponents", "coefficient"])


# -- experiments ------------------------------------------------------------------------


def cmd_explog(args):
    phi = load_updiffeo(args.phi, args.order)
    X = log_updiffeo(phi)
    back = exp_field(X, order=args.order)
    again = log_updiffeo(UpDiffeo(back.F, check=False))
    ok_map = back.F.truncate(args.order) == phi.F.truncate(args.order)
    ok_field = again.x_component.truncate(args.order) == X.x_component.truncate(args.order)
    verdict = PASS if ok_map and ok_field else FAIL
    payload = header(
        args,
        "explog",
        generator=X.to_json(),
        exp_of_log_matches=ok_map,
        log_of_exp_matches=ok_field,
        verdict=verdict,
    )
    emit(args, payload, _series_csv(X.x_component))
    return verdict


def _solution_payload(sol):
    return {"tau": sol.tau.to_json(), "beta": sol.beta.to_json(), "pole_free": sol.pole_free}


def _load_pair(args, locus):
    # the unit loses nu(f) degrees and alpha another nu(f) - 1, so read a little deeper
    depth = args.order + 2 * locus.multiplicity
    return load_updiffeo(args.phi1, depth), load_updiffeo(args.phi2, depth)


def cmd_homsolve(args):
    locus = load_locus(args.locus)
    phi1, phi2 = _load_pair(args, locus)
    eq = build_homological(phi1, phi2, locus)
    try:
        sol = solve_special(eq)
        sol = type(sol)(sol.tau.truncate(args.order), sol.beta.truncate(args.order), sol.locus, sol.pole_free)
    except NotSpecial as exc:
        payload = header(args, "homsolve", special=False, obstruction_degree=exc.degree, verdict=FAIL)
        relation = getattr(exc, "relation", None)
        if relation:
            payload["obstruction_monomial"] = list(relation[0])
            payload["obstruction_residual"] = str(relation[1])
        emit(args, payload)
        return FAIL
    ok = sol.verify(eq)
    payload = header(args, "homsolve", special=True, verdict=PASS if ok else FAIL, **_solution_payload(sol))
    emit(args, payload, _series_csv(sol.beta))
    return payload["verdict"]


def cmd_conjugate(args):
    locus = load_locus(args.locus)
    phi1, phi2 = _load_pair(args, locus)
    sol = solve_special(build_homological(phi1, phi2, locus))
    sigma = path_conjugation(phi1, phi2, sol, locus, detour=args.detour, order=args.order, verify=False)
    try:
        ok = check_conjugacy(sigma, phi1, phi2, locus, sigma.order)
    except AssertionError:
        ok = False
    verdict = PASS if ok else FAIL
    emit(args, header(args, "conjugate", sigma=sigma.to_json(), verdict=verdict), _series_csv(sigma.F))
    return verdict


def _transport(args, name, value):
    payload = header(args, name, value=value.to_json(), verdict=PASS)
    if args.window:
        rep = value.root_test(args.window, precision=args.precision_bits)
        payload["growth"] = rep.to_json()
    emit(args, payload, _series_csv(value.series))
    return PASS


def cmd_sab(args):
    phi = load_updiffeo(args.phi)
    return _transport(args, "sab", S_ab(phi, args.a, args.b, args.order))


def cmd_tc(args):
    phi = load_updiffeo(args.phi)
    return _transport(args, "tc", T_c(phi, args.c, args.order))


def cmd_l2(args):
    v = load_series(args.v, ("x", "y"), args.order)
    g = load_series(args.g, ("x", "y"), args.order)
    return _transport(args, "l2", L2(v, g, args.order))


def cmd_l3(args):
    v = load_series(args.v, ("x", "y", "z"), args.order)
    g = load_series(args.g, ("x", "y", "z"), args.order)
    return _transport(args, "l3", L3(v, g, args.order))


def cmd_lambda_profile(args):
    locus = load_locus(args.locus)
    need = args.order + 2 * locus.multiplicity
    if args.phi0:
        phi0 = load_updiffeo(args.phi0, need)
        delta = load_series(args.delta, locus.vars, need)
        fam = PolynomialFamily(phi0, locus, delta)
    else:
        fam = random_family(random.Random(args.seed), locus, need)
    prof = lambda_profile(fam, args.order, args.lambda_cap)
    verdict = PASS if prof.passes else FAIL
    payload = header(args, "lambda-profile", profile=prof.to_json(), verdict=verdict, delta=fam.delta.to_json())
    rows = [
        {"table": "rhs", "monomial": " ".join(map(str, e)), "lambda_degree": len(p) - 1, "bound": prof.rhs_bound(e)}
        for e, p in sorted(prof.rhs.items())
    ] + [
        {"table": "unit", "monomial": " ".join(map(str, e)), "lambda_degree": len(p) - 1, "bound": prof.unit_bound(e)}
        for e, p in sorted(prof.unit.items())
    ]
    emit(args, payload, _csv(rows, ["table", "monomial", "lambda_degree", "bound"]))
    return verdict


def cmd_hilbert(args):
    rows = []
    ok = True
    for k in range(1, args.kmax + 1):
        rep = hilbert_report(k, args.precision_bits)
        rows.append(rep.row())
        if not (rep.kalyabin_ratio > 0 and mpmath.isfinite(rep.kalyabin_ratio)):
            ok = False
    verdict = PASS if ok else FAIL
    payload = header(args, "hilbert", kmax=args.kmax, precision=args.precision_bits, rows=rows, verdict=verdict)
    emit(args, payload, _csv(rows, ["k", "norm", "ratio", "residual"]))
    return verdict


def cmd_growth(args):
    vars = tuple(args.vars.split(","))
    s = load_series(args.series, vars, args.order)
    window = args.window or int(s.order)
    out = {"series": root_test(s, window, threshold=args.threshold, precision=args.precision_bits, block=args.block)}
    if args.functionals:
        mode = "L2" if len(vars) == 2 else "L3"
        out["functionals"] = functional_norms(s, mode, window, args.precision_bits)
        out["bounds"] = coefficient_bound_check(s, window=window, mode=mode, slack=args.slack, precision=args.precision_bits)
    payload = header(args, "growth", window=window, **{k: v.to_json() for k, v in out.items()})
    if "bounds" in out:
        payload["bound_verdict"] = PASS if out["bounds"].passes else FAIL
    emit(args, payload, out["series"].to_csv())
    return payload.get("bound_verdict", PASS)


def cmd_perturb_diagnose(args):
    order = args.order or PERTURB_ORDER
    results, growing = perturb_diagnose(
        args.seed, args.count, order=order, block=args.block, threshold=args.threshold, precision=args.precision_bits
    )
    need = math.ceil(PERTURB_REQUIRED * args.count / PERTURB_SEEDS)
    verdict = PASS if growing >= need else FAIL
    args.order = order
    payload = header(
        args,
        "perturb-diagnose",
        locus="x^2(x-y)",
        block=args.block,
        growing=growing,
        required=need,
        runs=[r.to_json() for r in results],
        verdict=verdict,
        note="finite-window heuristic; a GROWING verdict is evidence, not proof, of divergence",
    )
    rows = [
        {
            "seed": r.seed,
            "verdict": r.verdict,
            "per_degree_verdict": r.report.per_degree_verdict,
            "last_root": mpmath.nstr(r.report.roots[-1], 20),
        }
        for r in results
    ]
    emit(args, payload, _csv(rows, ["seed", "verdict", "per_degree_verdict", "last_root"]))
    return verdict


# -- parser --------------------------------------------------------------------------


def _positive(text):
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--order", type=_positive, default=None, help="truncation order")
    common.add_argument("--window", type=_positive, default=None, help="degree window for growth diagnostics")
    common.add_argument(
        "--precision-bits", type=int, default=None, help=f"big-float mantissa bits (default ${PRECISION_ENV} or 256)"
    )
    common.add_argument("--slack", default="2", help="constant slack factor for coefficient bounds")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", default=None, help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    p = argparse.ArgumentParser(prog="germforge", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, default_order, help):
        sp = sub.add_parser(name, parents=[common], help=help)
        sp.set_defaults(func=fn, default_order=default_order)
        return sp

    sp = add("explog", cmd_explog, 12, "exp/log round trip of a map")
    sp.add_argument("--phi", default="exp_unit.json")

    for name, fn, help in (
        ("homsolve", cmd_homsolve, "solve the homological equation of a pair"),
        ("conjugate", cmd_conjugate, "build a normalized conjugacy by the path method"),
    ):
        sp = add(name, fn, 10, help)
        sp.add_argument("--phi1", default="exp_f.json")
        sp.add_argument("--phi2", default="exp_unit.json")
        sp.add_argument("--locus", default="x(x-y)")
        if name == "conjugate":
            sp.add_argument("--detour", action="store_true")

    sp = add("sab", cmd_sab, 10, "transport operator S_ab")
    sp.add_argument("--phi", default="exp_unit.json")
    sp.add_argument("--a", type=int, default=1)
    sp.add_argument("--b", type=int, default=1)

    sp = add("tc", cmd_tc, 8, "transport operator T_c")
    sp.add_argument("--phi", default="exp_cusp.json")
    sp.add_argument("--c", type=int, default=1)

    for name, fn in (("l2", cmd_l2), ("l3", cmd_l3)):
        sp = add(name, fn, 12, f"functional {name.upper()}^v(g)")
        sp.add_argument("--v", required=True)
        sp.add_argument("--g", default="1")

    sp = add("lambda-profile", cmd_lambda_profile, 8, "lambda-degree bounds of a polynomial family")
    sp.add_argument("--locus", default="x^2(x-y)")
    sp.add_argument("--phi0", default=None)
    sp.add_argument("--delta", default="1")
    sp.add_argument("--lambda-cap", type=int, default=None)

    sp = add("hilbert", cmd_hilbert, None, "Hilbert inverse norms and their asymptotic ratio")
    sp.add_argument("--kmax", type=int, default=12)

    sp = add("growth", cmd_growth, 25, "root-test diagnostics of a series")
    sp.add_argument("--series", required=True)
    sp.add_argument("--vars", default="x,y")
    sp.add_argument("--threshold", type=float, default=DEFAULT_GROWTH_THRESHOLD)
    sp.add_argument("--block", type=int, default=1)
    sp.add_argument("--functionals", action="store_true", help="also reconstruct coefficients from functionals")

    sp = add("perturb-diagnose", cmd_perturb_diagnose, PERTURB_ORDER, "generator growth of seeded perturbations")
    sp.add_argument("--count", type=int, default=PERTURB_SEEDS)
    sp.add_argument("--block", type=int, default=PERTURB_BLOCK)
    sp.add_argument("--threshold", type=float, default=DEFAULT_GROWTH_THRESHOLD)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_PASS
    if args.order is None:
        args.order = args.default_order
    try:
        args.precision_bits = checked_precision(args.precision_bits or default_precision())
        if args.order is not None and args.command not in ("hilbert",) and args.order < 2:
            raise InputError("order must be at least 2")
        if args.window is not None and args.order is not None and args.window > args.order:
            raise InputError("window may not exceed the order")
        verdict = args.func(args)
    except (InputError, VariableMismatch) as exc:
        print(f"germforge {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except GermforgeError as exc:
        print(f"germforge {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except AssertionError as exc:
        print(f"germforge {args.command}: property failure: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (ValueError, KeyError, TypeError) as exc:
        print(f"germforge {args.command}: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_PASS if verdict == PASS else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
