"""Command-line entry point: ``subcurv <command> [options]``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import json
import math
import random
import sys
from fractions import Fraction
from pathlib import Path

from subcurv import __version__
from subcurv.errors import NotCarnot, SubcurvError
from subcurv.forms import (
    NU_GRID,
    CDParams,
    cd_coefficients,
    check_bochner,
    evaluate_forms,
    falsify_cd,
    improved_bounds_over_nu,
    nu_candidates,
)
from subcurv.ncdiff import random_jet, verify_vertical_commutation
from subcurv.structures import MODELS, StructureConstants, parse_model_spec, validate_structure, yang_mills_check

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3
SCHEMA = 1

MODEL_HELP = {
    "g_rho1": "three-dimensional model with [X,Y]=Z, [X,Z]=-rho1 Y, [Y,Z]=rho1 X (param: rho1)",
    "su2": "g_rho1 with rho1 = 1",
    "sl2": "g_rho1 with rho1 = -1",
    "heisenberg": "Heisenberg group of dimension 2n+1 (param: n)",
    "quaternionic_heisenberg": "H-type group with d = 4, h = 3",
    "carnot_step2": "user gamma tensor; load it with --file",
}


class UsageError(Exception):
    pass


def _fraction_json(x):
    return str(x) if isinstance(x, Fraction) else x


# -- inputs -------------------------------------------------------------------


def load_structure(args) -> StructureConstants:
    if getattr(args, "file", None):
        try:
            text = Path(args.file).read_text()
        except OSError as exc:
            raise IOError(str(exc)) from exc
        try:
            return StructureConstants.loads(text)
        except (ValueError, KeyError, TypeError) as exc:
            raise UsageError(f"malformed structure file: {exc}") from exc
    if getattr(args, "model", None):
        return parse_model_spec(args.model)
    raise UsageError("give --model or --file")


def resolve_params(text: str | None, sc: StructureConstants) -> CDParams:
    if text is None:
        raise UsageError("--params is required")
    if text == "auto":
        if not sc.is_step2_carnot:
            raise UsageError("--params auto needs a step-2 Carnot structure")
        from subcurv.cdconst import carnot_params

        return carnot_params(sc)
    return CDParams.parse(text)


def params_dict(p: CDParams) -> dict:
    return {"rho1": str(p.rho1), "rho2": str(p.rho2), "kappa": str(p.kappa), "d": str(p.d)}


# -- commands -----------------------------------------------------------------


def cmd_catalog(args) -> dict:
    return {"checks": [], "models": [{"name": m, "description": MODEL_HELP[m]} for m in MODELS]}


def cmd_validate(args) -> dict:
    sc = load_structure(args)
    rep = validate_structure(sc)
    comm = [r.format(sc) for r in verify_vertical_commutation(sc)] if rep.passed else []
    checks = [
        {"name": "structure_relations", "anchor": "skew-symmetry, Killing condition and Jacobi identity", **rep.to_dict()},
    ]
    if rep.passed:
        checks.append(
            {
                "name": "vertical_commutation",
                "anchor": "sub-Laplacian commutes with vertical fields",
                "passed": all(c == "0" for c in comm),
                "residuals": comm,
            }
        )
    return {"structure": sc.name, "checks": checks}


def cmd_yang_mills(args) -> dict:
    sc = load_structure(args)
    rep = yang_mills_check(sc)
    return {"structure": sc.name, "checks": [{"name": "yang_mills", "anchor": "divergence of torsion vanishes", **rep.to_dict()}]}


def _jets(sc: StructureConstants, count: int, seed: int, magnitude: int):
    rng = random.Random(seed)
    for _ in range(count):
        yield random_jet(sc, 3, rng.randrange(2**63), magnitude)


def cmd_bochner(args) -> dict:
    sc = load_structure(args)
    bad = []
    for k, jet in enumerate(_jets(sc, args.trials, args.seed, args.magnitude)):
        h, v = check_bochner(jet, sc)
        if h or v:
            bad.append({"trial": k, "horizontal": str(h), "vertical": str(v)})
    return {
        "structure": sc.name,
        "checks": [
            {
                "name": "bochner",
                "anchor": "horizontal and vertical Bochner identities",
                "passed": not bad,
                "trials": args.trials,
                "nonzero": bad[:10],
                "nonzero_count": len(bad),
            }
        ],
    }


def cmd_cd_check(args) -> dict:
    """``trials`` counts (jet, nu) pairs; each jet is paired with the full nu grid."""
    sc = load_structure(args)
    p = resolve_params(args.params, sc)
    per_jet = len(NU_GRID) + 1
    jets = max(1, math.ceil(args.trials / per_jet))
    done, violations, worst = 0, [], None
    for k, jet in enumerate(_jets(sc, jets, args.seed, args.magnitude)):
        A, B, C = cd_coefficients(evaluate_forms(jet, sc), p)
        for nu in nu_candidates(B, C)[: args.trials - done]:
            r = A + B * nu + C / nu
            done += 1
            worst = r if worst is None or r < worst else worst
            if r < 0:
                violations.append({"trial": k, "nu": str(nu), "residual": str(r)})
    return {
        "structure": sc.name,
        "params": params_dict(p),
        "checks": [
            {
                "name": "cd_inequality",
                "anchor": "generalized curvature-dimension inequality",
                "passed": not violations,
                "trials": done,
                "violations": len(violations),
                "first_violations": violations[:5],
                "min_residual": str(worst),
            }
        ],
    }


def cmd_cd_falsify(args) -> dict:
    sc = load_structure(args)
    p = resolve_params(args.params, sc)
    ce = falsify_cd(sc, p, args.trials, args.seed, args.magnitude)
    found = ce is not None
    entry = {
        "name": "cd_falsification",
        "anchor": "converse of the curvature-dimension criterion (random witness search)",
        "violation_found": found,
        "trials": args.trials,
        "passed": found if args.expect_violation else not found,
    }
    if found:
        entry["witness"] = {
            "trial": ce.trial,
            "nu": str(ce.nu),
            "residual": str(ce.residual),
            "jet": {" ".join(sc.symbol_name(a) for a in w) or "f": str(v) for w, v in ce.jet.values.items() if v},
        }
    return {"structure": sc.name, "params": params_dict(p), "checks": [entry]}


def cmd_improved_bounds(args) -> dict:
    sc = load_structure(args)
    p = resolve_params(args.params, sc)
    ym = yang_mills_check(sc).passed
    if not ym:
        return {"structure": sc.name, "checks": [{"name": "improved_bounds", "passed": False, "reason": "not Yang-Mills"}]}
    per_jet = len(NU_GRID)
    jets = max(1, math.ceil(args.trials / per_jet))
    neg, done = [], 0
    for k, jet in enumerate(_jets(sc, jets, args.seed, args.magnitude)):
        for nu, r1, r2 in improved_bounds_over_nu(jet, sc, p, NU_GRID):
            done += 1
            if r1 < 0 or r2 < 0:
                neg.append({"trial": k, "nu": str(nu), "res1": str(r1), "res2": str(r2)})
    return {
        "structure": sc.name,
        "params": params_dict(p),
        "checks": [
            {
                "name": "improved_bounds",
                "anchor": "second-derivative bounds on Yang-Mills structures",
                "passed": not neg,
                "trials": done,
                "negative": neg[:5],
            }
        ],
    }


def cmd_constants(args) -> dict:
    from subcurv.cdconst import carnot_cd_constants, geometric_constants

    sc = load_structure(args)
    out: dict = {"structure": sc.name, "checks": []}
    try:
        c = carnot_cd_constants(sc)
    except NotCarnot:
        c = None
    if c is not None:
        out["carnot"] = {"rho2": c.rho2, "kappa": c.kappa, "is_htype": c.is_htype}
        g = geometric_constants(CDParams(0, Fraction(c.rho2).limit_denominator(10**6), Fraction(c.kappa).limit_denominator(10**6), sc.d))
        out["geometric"] = {"D": g.D}
        out["checks"].append({"name": "carnot_constants", "anchor": "CD constants of step-2 Carnot groups", "passed": True})
    if args.params:
        p = CDParams.parse(args.params)
        g = geometric_constants(p)
        out["params"] = params_dict(p)
        out["geometric"] = {"D": g.D, "alpha": g.alpha, "diameter_bound": g.diameter_bound}
    return out


def cmd_diameter(args) -> dict:
    from subcurv.cdconst import diameter_via_quadrature, geometric_constants

    p = CDParams.parse(args.params)
    g = geometric_constants(p)
    if g.diameter_bound is None:
        raise UsageError("the diameter bound needs rho1 > 0")
    q = diameter_via_quadrature(p, args.tol)
    delta = abs(q - g.diameter_bound)
    return {
        "params": params_dict(p),
        "diameter_bound": g.diameter_bound,
        "quadrature": q,
        "delta": delta,
        "checks": [
            {
                "name": "diameter",
                "anchor": "Bonnet-Myers type diameter bound and its quadrature form",
                "passed": delta <= args.tol,
                "delta": delta,
            }
        ],
    }


def _heat_config(args):
    from subcurv.heat.suite import HeatConfig

    cfg = HeatConfig()
    if getattr(args, "quick", False):
        cfg = cfg.quick()
    updates = {}
    for key in ("spacing", "half_width", "z_half_width", "nz"):
        v = getattr(args, key, None)
        if v is not None:
            updates[key] = v
    if updates:
        from dataclasses import replace

        cfg = replace(cfg, **updates)
    return cfg


def _heat_structure(args) -> StructureConstants:
    sc = load_structure(args)
    if not sc.is_step2_carnot:
        raise UsageError("heat commands need a step-2 Carnot structure")
    return sc


def cmd_heat_sim(args) -> dict:
    from subcurv.heat.grid import evolve, gaussian_bump, near_delta, write_snapshot

    sc = _heat_structure(args)
    cfg = _heat_config(args)
    chart = cfg.chart(sc)
    f0 = near_delta(chart, (0.0,) * (sc.d + sc.h)) if args.init == "delta" else gaussian_bump(chart, cfg.bump_sigma, cfg.bump_sigma)
    f = evolve(f0, args.time, monitor=True)
    masses = [r.mass for r in f.history]
    mins = [r.min_value for r in f.history]
    if args.snapshot:
        try:
            write_snapshot(args.snapshot, f)
        except OSError as exc:
            raise IOError(str(exc)) from exc
    non_increasing = all(b <= a + 1e-12 * abs(a) for a, b in zip([f0.mass()] + masses, masses))
    positive = min(mins) >= -1e-12 * float(f0.values.max())
    return {
        "structure": sc.name,
        "heat": cfg.to_dict(),
        "time": f.time,
        "initial_mass": f0.mass(),
        "final_mass": masses[-1],
        "min_value": min(mins),
        "snapshot": args.snapshot,
        "checks": [
            {"name": "mass_non_increasing", "anchor": "sub-Markov property", "passed": non_increasing},
            {"name": "positivity", "anchor": "positivity of the heat semigroup", "passed": positive},
        ],
    }


HEAT_ANCHORS = {
    "mass_positivity": "sub-Markov property and positivity",
    "kernel_symmetry": "symmetry of the heat kernel",
    "li_yau": "Li-Yau gradient estimate (rho1 = 0)",
    "harnack": "parabolic Harnack inequality",
    "ultracontractivity": "monotonicity of t^(D/2) P_t f",
    "on_diagonal": "on-diagonal heat kernel upper bound",
    "gradient_decay": "pointwise gradient decay",
    "off_diagonal_fit": "off-diagonal Gaussian bound (fitted constant, reported only)",
    "variational": "integrated variational inequality with b(t) = (T-t)^3",
}


def cmd_estimates(args) -> dict:
    from subcurv.heat.suite import run_heat_suite

    sc = _heat_structure(args)
    p = resolve_params(args.params or "auto", sc)
    cfg = _heat_config(args)
    reports = run_heat_suite(sc, p, cfg)
    checks = []
    for name, rep in reports.items():
        d = rep.to_dict()
        d["anchor"] = HEAT_ANCHORS.get(name, name)
        checks.append(d)
    return {"structure": sc.name, "params": params_dict(p), "heat": cfg.to_dict(), "checks": checks}


COMMANDS = {
    "catalog": cmd_catalog,
    "validate": cmd_validate,
    "bochner": cmd_bochner,
    "cd-check": cmd_cd_check,
    "cd-falsify": cmd_cd_falsify,
    "constants": cmd_constants,
    "yang-mills": cmd_yang_mills,
    "improved-bounds": cmd_improved_bounds,
    "heat-sim": cmd_heat_sim,
    "estimates": cmd_estimates,
    "diameter": cmd_diameter,
}


# -- rendering ----------------------------------------------------------------


def _short(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (dict, list)):
        return json.dumps(v, sort_keys=True, default=_fraction_json)
    return str(v)


def render(doc: dict) -> str:
    """Human-readable summary; a pure function of the report document."""
    lines = [f"subcurv {doc.get('version', '?')} :: {doc.get('command', '?')}"]
    if doc.get("structure"):
        lines.append(f"structure: {doc['structure']}")
    if doc.get("params"):
        p = doc["params"]
        lines.append(f"params: CD({p['rho1']}, {p['rho2']}, {p['kappa']}, {p['d']})")
    for key in ("models",):
        for m in doc.get(key, []):
            lines.append(f"  {m['name']:<26} {m['description']}")
    for key in ("carnot", "geometric", "diameter_bound", "quadrature", "delta", "initial_mass", "final_mass", "min_value"):
        if key in doc:
            lines.append(f"{key}: {_short(doc[key])}")
    for c in doc.get("checks", []):
        mark = "PASS" if c.get("passed") else "FAIL"
        extra = []
        for k in ("trials", "samples", "worst", "tolerance", "violations", "violation_found", "delta"):
            if k in c:
                extra.append(f"{k}={_short(c[k])}")
        lines.append(f"[{mark}] {c['name']}" + (f" ({', '.join(extra)})" if extra else ""))
        if c.get("anchor"):
            lines.append(f"       {c['anchor']}")
    lines.append("overall: " + ("PASS" if doc.get("passed") else "FAIL"))
    return "\n".join(lines) + "\n"


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="subcurv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"subcurv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, structure=True, params=False, trials=False):
        if structure:
            g = sp.add_mutually_exclusive_group()
            g.add_argument("--model", help="catalog model, e.g. heisenberg:1 or g_rho1:-1/2")
            g.add_argument("--file", help="structure document (JSON)")
        if params:
            sp.add_argument("--params", help="rho1,rho2,kappa,d or 'auto' for Carnot structures")
        if trials:
            sp.add_argument("--trials", type=int, default=1000)
            sp.add_argument("--seed", type=int, default=0)
            sp.add_argument("--magnitude", type=int, default=5)
        sp.add_argument("--output", help="write the JSON report here")

    common(sub.add_parser("catalog", help="list catalog models"), structure=False)
    common(sub.add_parser("validate", help="check structure relations"))
    common(sub.add_parser("yang-mills", help="Yang-Mills test"))
    common(sub.add_parser("bochner", help="exact Bochner identities on random jets"), trials=True)
    common(sub.add_parser("cd-check", help="CD inequality on random jets"), params=True, trials=True)
    sp = sub.add_parser("cd-falsify", help="search for CD counterexamples")
    common(sp, params=True, trials=True)
    sp.add_argument("--expect-violation", action="store_true", help="succeed when a counterexample is found")
    sp.set_defaults(magnitude=3)
    common(sub.add_parser("improved-bounds", help="second-derivative bounds"), params=True, trials=True)
    sp = sub.add_parser("constants", help="CD and geometric constants")
    common(sp)
    sp.add_argument("--params", help="rho1,rho2,kappa,d for the geometric constants")
    sp = sub.add_parser("diameter", help="diameter bound and its quadrature")
    sp.add_argument("--params", required=True)
    sp.add_argument("--tol", type=float, default=1e-6)
    sp.add_argument("--output")
    for name, helptext in (("heat-sim", "simulate the heat flow"), ("estimates", "full heat suite")):
        sp = sub.add_parser(name, help=helptext)
        common(sp, params=name == "estimates")
        sp.add_argument("--quick", action="store_true", help="coarse grid for smoke runs")
        sp.add_argument("--spacing", type=float)
        sp.add_argument("--half-width", dest="half_width", type=float)
        sp.add_argument("--z-half-width", dest="z_half_width", type=float)
        sp.add_argument("--nz", type=int)
        if name == "heat-sim":
            sp.add_argument("--time", type=float, default=0.1)
            sp.add_argument("--init", choices=("bump", "delta"), default="bump")
            sp.add_argument("--snapshot", help="write the final field here")
    sp = sub.add_parser("report", help="re-render a saved JSON report")
    sp.add_argument("input")
    return parser


def _config_echo(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("output",)}


def run_command(argv: list[str] | None = None, stdout=None) -> tuple[int, dict | None]:
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_USAGE if exc.code else EXIT_OK), None
    if args.command == "report":
        try:
            doc = json.loads(Path(args.input).read_text())
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO, None
        except json.JSONDecodeError as exc:
            print(f"error: malformed report: {exc}", file=sys.stderr)
            return EXIT_USAGE, None
        stdout.write(render(doc))
        return (EXIT_OK if doc.get("passed") else EXIT_FAIL), doc
    try:
        body = COMMANDS[args.command](args)
    except IOError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO, None
    except (UsageError, SubcurvError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    doc = {
        "schema": SCHEMA,
        "version": __version__,
        "command": args.command,
        "config": _config_echo(args),
        "seed": getattr(args, "seed", None),
        **body,
    }
    doc["passed"] = all(c.get("passed", False) for c in doc.get("checks", []))
    doc = json.loads(json.dumps(doc, default=_fraction_json))
    if args.output:
        try:
            Path(args.output).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO, doc
    stdout.write(render(doc))
    return (EXIT_OK if doc["passed"] else EXIT_FAIL), doc


def main(argv: list[str] | None = None) -> int:
    code, _ = run_command(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
