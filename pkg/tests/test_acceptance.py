"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line; the lines are repeated in
the pytest terminal summary.  Run alone with ``pytest tests/test_acceptance.py``.
"""

import math
import random
import time
from fractions import Fraction


from subcurv.cdconst import brute_force_extrema, carnot_cd_constants, carnot_params, diameter_via_quadrature, geometric_constants
from subcurv.forms import (
    NU_GRID,
    CDParams,
    cd_coefficients,
    check_bochner,
    check_cd,
    check_improved_bounds,
    evaluate_forms,
    falsify_cd,
    improved_bounds_over_nu,
    iter_random_jets,
    nu_candidates,
)
from subcurv.heat.ccdist import ball_measure, cc_distance, distance_table
from subcurv.heat.suite import HeatConfig, run_heat_suite
from subcurv.ncdiff import Jet, verify_vertical_commutation
from subcurv.structures import StructureConstants, catalog_model, validate_structure, yang_mills_check

from support import random_carnot
from test_structures import torsion_counterexample

H1 = catalog_model("heisenberg", 1)
CD_H1 = CDParams(0, Fraction(1, 2), 1, 2)


def test_criterion_1_exact_bochner(criterion):
    rng = random.Random(20240101)
    rhos = {Fraction(rng.randint(-9, 9), rng.randint(1, 9)) for _ in range(200)}
    structures = [catalog_model("g_rho1", r) for r in sorted(rhos)[:20]]
    structures += [catalog_model("heisenberg", 1), catalog_model("heisenberg", 2), catalog_model("quaternionic_heisenberg")]
    structures += [random_carnot(rng) for _ in range(10)]
    assert len(structures) == 33
    start = time.perf_counter()
    nonzero = 0
    for k, sc in enumerate(structures):
        for jet in iter_random_jets(sc, 1000, seed=k):
            nonzero += check_bochner(jet, sc) != (0, 0)
    elapsed = time.perf_counter() - start
    ok = nonzero == 0 and elapsed < 60
    criterion(1, "Bochner residuals exactly 0 on 33 structures x 1000 jets", ok, f"nonzero={nonzero}, {elapsed:.1f}s")
    assert ok


def test_criterion_2_cd_constants(criterion):
    rows = []
    ok = True
    for sc, expected in ((H1, (0.5, 1.0)), (catalog_model("quaternionic_heisenberg"), (1.0, 3.0))):
        c = carnot_cd_constants(sc)
        lo, hi = brute_force_extrema(sc, 200000, 5)
        exact = abs(c.rho2 - expected[0]) <= 1e-10 and abs(c.kappa - expected[1]) <= 1e-10 and c.is_htype
        sampled = abs(lo - c.rho2) <= 1e-6 and abs(hi - c.kappa) <= 1e-6
        ok &= exact and sampled
        rows.append(f"{sc.name}: ({c.rho2:.12g}, {c.kappa:.12g}, H-type={c.is_htype}), sampled gap {max(abs(lo - c.rho2), abs(hi - c.kappa)):.1e}")
    criterion(2, "CD constants of H1 and the quaternionic group", ok, "; ".join(rows))
    assert ok


def test_criterion_3_tightness_and_falsification(criterion):
    trials, violations = 0, 0
    for jet in iter_random_jets(H1, 10**4, seed=11):
        A, B, C = cd_coefficients(evaluate_forms(jet, H1), CD_H1)
        for nu in nu_candidates(B, C):
            trials += 1
            violations += A + B * nu + C / nu < 0
            if trials == 10**4:
                break
        if trials == 10**4:
            break
    witness = Jet.from_symbols(H1, 3, {"X": 1, "YZ": 1})
    tight = check_cd(witness, H1, CD_H1, 1)
    found = {p: falsify_cd(H1, CDParams.parse(p), 10**4, 7) for p in ("0,1/2,1,1.9", "0,0.6,1,2", "0.1,1/2,1,2")}
    ok = violations == 0 and trials == 10**4 and tight == 0 and all(v is not None for v in found.values())
    where = ", ".join(f"CD({p}) at trial {v.trial}" if v else f"CD({p}) none" for p, v in found.items())
    criterion(3, "CD tightness on H1 and falsification of perturbed constants", ok, f"violations={violations}/{trials}, witness={tight}; {where}")
    assert ok


def _yang_mills_catalog():
    out = []
    for sc in (
        catalog_model("g_rho1", "1/2"),
        catalog_model("g_rho1", "-3/2"),
        catalog_model("su2"),
        catalog_model("sl2"),
    ):
        out.append((sc, CDParams(sc.delta[0][1][0], Fraction(1, 2), 1, 2)))
    for sc in (catalog_model("heisenberg", 1), catalog_model("heisenberg", 2), catalog_model("quaternionic_heisenberg")):
        out.append((sc, carnot_params(sc)))
    return out


def test_criterion_4_improved_bounds(criterion):
    ok, rows = True, []
    for sc, p in _yang_mills_catalog():
        assert yang_mills_check(sc).passed
        n, neg = 0, 0
        for jet in iter_random_jets(sc, math.ceil(10**4 / len(NU_GRID)), seed=3):
            for _, r1, r2 in improved_bounds_over_nu(jet, sc, p, NU_GRID):
                n += 1
                neg += r1 < 0 or r2 < 0
        ok &= neg == 0 and n >= 10**4
        rows.append(f"{sc.name} {p}: {neg}/{n}")
    tight = check_improved_bounds(Jet.from_symbols(H1, 3, {"Z": 1, "XZ": 1}), H1, CD_H1, 1)
    ok &= tight == (0, 0)
    criterion(4, "second-derivative bounds nonnegative on Yang-Mills catalog", ok, f"{'; '.join(rows)}; tight case ({tight[0]}, {tight[1]})")
    assert ok


def test_criterion_5_diameter(criterion):
    start = time.perf_counter()
    p = CDParams(1, Fraction(1, 2), 1, 2)
    bound = geometric_constants(p).diameter_bound
    quad = diameter_via_quadrature(p)
    ok = abs(bound - 12 * math.sqrt(2) * math.pi) <= 1e-9 and abs(quad - bound) <= 1e-6
    rng = random.Random(5)
    worst = 0.0
    for _ in range(20):
        q = CDParams(
            Fraction(rng.randint(1, 40), rng.randint(1, 10)),
            Fraction(rng.randint(1, 40), rng.randint(1, 10)),
            Fraction(rng.randint(0, 40), rng.randint(1, 10)),
            rng.randint(1, 12),
        )
        worst = max(worst, abs(diameter_via_quadrature(q) - geometric_constants(q).diameter_bound))
    elapsed = time.perf_counter() - start
    ok &= worst <= 1e-6 and elapsed < 5
    criterion(5, "diameter bound and quadrature", ok, f"bound={bound:.10f}, delta={abs(quad - bound):.1e}, worst random delta={worst:.1e}, {elapsed:.2f}s")
    assert ok


def test_criterion_6_heat_suite(criterion):
    start = time.perf_counter()
    cfg = HeatConfig()
    reports = run_heat_suite(H1, CD_H1, cfg)
    elapsed = time.perf_counter() - start
    mp = reports["mass_positivity"]
    ly = reports["li_yau"]
    od = reports["on_diagonal"]
    parts = {
        "a mass/positivity": mp.passed,
        "b symmetry": reports["kernel_symmetry"].passed and reports["kernel_symmetry"].details["relative"] <= 1e-8,
        "c Li-Yau": ly.details["fine_violation"] <= ly.tolerance and ly.details["shrinks"],
        "d Harnack": reports["harnack"].passed and reports["harnack"].samples >= 20,
        "e monotonicity": reports["ultracontractivity"].passed,
        "f on-diagonal": od.passed and all(r["p_mu"] <= 16 * math.e * (1 + od.tolerance) for r in od.details["samples"]),
        "g gradient/variational": reports["gradient_decay"].passed and reports["variational"].passed,
    }
    ok = all(parts.values()) and elapsed < 300
    detail = ", ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in parts.items())
    detail += f"; Li-Yau coarse {ly.details['coarse_violation']:.3f} -> fine {ly.details['fine_violation']:.3f}; {elapsed:.0f}s"
    criterion(6, "heat suite on H1 at the default configuration", ok, detail)
    assert ok


def test_criterion_7_cc_distance(criterion):
    horiz = [cc_distance(H1, (0, 0, 0), (1.0, 0, 0), r) for r in (1, 2, 3)]
    vert = [cc_distance(H1, (0, 0, 0), (0, 0, 1.0), r) for r in (1, 2, 3)]
    target = 2 * math.sqrt(math.pi)
    monotone = all(a >= b for a, b in zip(vert, vert[1:])) and all(a >= b for a, b in zip(horiz, horiz[1:]))
    table = distance_table(H1, 0.05, 1.1, 0.2, 3)
    ratio = ball_measure(H1, 1.0, 3, table=table) / ball_measure(H1, 0.5, 3, table=table)
    ok = abs(horiz[-1] - 1) <= 0.02 and abs(vert[-1] - target) <= 0.05 * target and monotone and abs(ratio - 16) <= 1.6
    criterion(
        7,
        "CC distance and ball dilation on H1",
        ok,
        f"d(e,X)={horiz[-1]:.4f}, d(e,Z) by resolution={[round(v, 4) for v in vert]} vs {target:.4f}, ratio={ratio:.2f}",
    )
    assert ok


def test_criterion_8_structural_checks(criterion):
    catalog = [
        catalog_model("g_rho1", "2/5"),
        catalog_model("su2"),
        catalog_model("sl2"),
        catalog_model("heisenberg", 1),
        catalog_model("heisenberg", 3),
        catalog_model("quaternionic_heisenberg"),
        catalog_model("carnot_step2", [[[0, 1, 2], [-1, 0, 0], [-2, 0, 0]]]),
    ]
    good = all(validate_structure(sc).passed and yang_mills_check(sc).passed for sc in catalog)
    commuting = all(all(r == 0 for r in verify_vertical_commutation(sc)) for sc in catalog)
    bad_relations = [
        StructureConstants.build(2, 1, gamma={(0, 0, 1): 1, (0, 1, 0): 1}),
        StructureConstants.build(2, 1, gamma={(0, 0, 1): 1, (0, 1, 0): -1}, delta={(0, 0, 0): 1}),
        StructureConstants.build(2, 2, gamma={(0, 0, 1): 1, (0, 1, 0): -1}, theta={(0, 0, 1): 1, (0, 1, 0): -1}),
    ]
    rejected = all(not validate_structure(sc).passed for sc in bad_relations)
    torsion = torsion_counterexample()
    ym_rejected = validate_structure(torsion).passed and not yang_mills_check(torsion).passed
    ok = good and commuting and rejected and ym_rejected
    criterion(
        8,
        "structural validation, Yang-Mills test and [L, Z] = 0",
        ok,
        f"catalog ok={good}, commutation ok={commuting}, invalid rejected={rejected}, torsion example rejected={ym_rejected}",
    )
    assert ok
