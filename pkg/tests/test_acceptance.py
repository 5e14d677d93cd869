"""Acceptance suite: one test group per criterion, each recording a PASS/FAIL line.

The lines are collected by conftest and printed in the terminal summary, so a
plain ``pytest tests/test_acceptance.py`` ends with the full scorecard.
"""

from __future__ import annotations

import itertools
import random
import tempfile
from pathlib import Path

import numpy as np
import pytest

from openbook.algebra import (
    ChartError,
    chart_matrix,
    is_zero_vector,
    milnor_equality_residual,
    normalized_gradient_residual,
)
from openbook.euler import ParityError, invert_fiber_chi, predict_link_chi
from openbook.numsolve import emptiness_score
from openbook.pipeline import run
from openbook.polyring import PolyMap, parse_polynomial
from openbook.scenario import builtin
from openbook.systems import WorldSpec, sigma_Fbar_charts
from conftest import builtin_report
from strategies import random_map

XYZ = ["x", "y", "z"]
BUILTIN_NAMES = ["milnor-global", "milnor-local", "polar-mixed", "smooth-global", "toy-xy-sphere"]
SEED_NAMES = ["smooth-global", "milnor-local", "milnor-global", "toy-xy-sphere"]


def _value(entry):
    return entry["value"] if isinstance(entry, dict) else entry


# ---------------------------------------------------------------------------
# 1. identity suite


def test_c1_identity_suite(criterion):
    rng = random.Random(2024)
    milnor_fail = 0
    for case in range(100):
        p = 3 if case % 2 == 0 else 4
        N = rng.randint(p, 5)
        F = random_map(rng, N, p, max_deg=3)
        for t in itertools.combinations(range(1, p + 1), 3):
            if not is_zero_vector(milnor_equality_residual(F, *t)):
                milnor_fail += 1

    # normalized gradient: 1000 points, 10 maps, every component j
    grad_fail = grad_points = 0
    nrng = np.random.default_rng(7)
    for m in range(10):
        p = 2 + m % 3
        N = 3 + m % 3
        F = random_map(rng, N, p, max_deg=3)
        for x in nrng.uniform(-1.5, 1.5, (100, N)):
            try:
                worst = max(normalized_gradient_residual(F, j, x) for j in range(1, p + 1))
            except ChartError:
                continue
            grad_points += 1
            grad_fail += worst > 1e-9

    chart_fail = {}
    for p in (2, 3, 4):
        F = random_map(rng, 4, p, max_deg=2)
        bad = done = 0
        for x in nrng.uniform(-1, 1, (1000, 4)):
            vals = np.abs([float(f.evaluate(x)) for f in F])
            i = int(np.argmax(vals)) + 1  # the best-conditioned chart
            cm = chart_matrix(F, i, x)
            done += 1
            bad += not (cm.det_check and cm.eigen_check and cm.symmetric)
        chart_fail[p] = (bad, done)

    ok = (milnor_fail == 0 and grad_fail == 0 and grad_points >= 990
          and all(b == 0 and d == 1000 for b, d in chart_fail.values()))
    criterion(1, ok, f"milnor failures {milnor_fail}/100 maps; gradient failures {grad_fail}/{grad_points} pts; "
                     f"chart failures {', '.join(f'p={p}: {b}/{d}' for p, (b, d) in chart_fail.items())}")
    assert milnor_fail == 0
    assert grad_fail == 0 and grad_points >= 990
    assert all(b == 0 and d == 1000 for b, d in chart_fail.values())


# ---------------------------------------------------------------------------
# 2. smooth global example


@pytest.mark.slow
def test_c2_smooth_global(criterion):
    _, rep = builtin_report("smooth-global")
    cond = rep["conditions"]
    F = PolyMap.parse(["x^2 + y", "x + z"], XYZ)
    scores = [emptiness_score(sys, 10.0, 2000, 42) for sys in sigma_Fbar_charts(F, WorldSpec.sphere(3, 10))]
    eul = rep["euler"]
    fib = eul["fiber"]
    checks = {
        "(a)": cond["condition_a"]["holds"],
        "(b)": cond["condition_b"]["holds"] and all(s.verdict == "empty" and s.score > 1e-6 for s in scores),
        "fibration": cond["fibration"] == "YES",
        "link {x+z=0}": _value(eul["links"]["2"]) == 0,
        "chi(V_W(F))": _value(eul["links"]["1,2"]) == 2,
        "fiber inverted": _value(fib["primary"]) == 1,
        "fiber boundary": _value(fib["boundary"]) == 1,
        "fiber oracle": _value(fib["oracle"]) == 1,
    }
    detail = "; ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items())
    criterion(2, all(checks.values()), f"{detail}; scores {[round(s.score, 4) for s in scores]}")
    assert all(checks.values()), detail


# ---------------------------------------------------------------------------
# 3. local example: (b) fails, accumulation at the center


def _local_branch_residual(rep) -> float:
    worst = 0.0
    for entry in rep["conditions"]["witness_checks"]:
        worst = max(worst, entry["checks"]["z!=0 branch"]["max_abs_residual"])
    return worst


@pytest.mark.slow
def test_c3_local_failure_of_b(criterion):
    _, rep = builtin_report("milnor-local")
    sweep = rep["conditions"]["condition_b"]["sweep"]
    n_witness = sum(len(e["witnesses"]) for e in rep["conditions"]["witness_checks"])
    branch = _local_branch_residual(rep)
    verdict_ok = (not rep["conditions"]["condition_b"]["holds"]
                  and sweep["verdict"] == "accumulates-at-center" and n_witness > 0)
    full = verdict_ok and branch <= 1e-8
    criterion(3, full, f"(b) holds={rep['conditions']['condition_b']['holds']}, verdict {sweep['verdict']}, "
                       f"{n_witness} witnesses, z!=0 branch residual {branch:.3g} (needs <= 1e-8; "
                       f"that branch has no real points off the origin)")
    assert verdict_ok


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="the z!=0 branch equations have no real solution besides the origin, "
                                       "so no witness on a sphere can satisfy them; see decisions ledger")
def test_c3_witnesses_on_z_nonzero_branch():
    _, rep = builtin_report("milnor-local")
    assert _local_branch_residual(rep) <= 1e-8


def test_c3_branch_is_empty_off_origin():
    # 2y = x^2 + 3y^2 gives x^2 = 2y - 3y^2 with 0 <= y <= 2/3, hence
    # x^2 + y^3 + z^2 - x^2 y = x^2 (1 - y) + y^3 + z^2 > 0 unless x = y = z = 0
    g1 = parse_polynomial("2*y - x^2 - 3*y^2", XYZ)
    g2 = parse_polynomial("x^2 + y^3 + z^2 - x^2*y", XYZ)
    ys = np.linspace(0, 2 / 3, 2001)[1:]
    xs = np.sqrt(np.maximum(2 * ys - 3 * ys ** 2, 0))
    for x, y in zip(xs[::50], ys[::50]):
        assert abs(float(g1.evaluate([x, y, 0.0]))) <= 1e-12
        assert float(g2.evaluate([x, y, 0.0])) > 0


# ---------------------------------------------------------------------------
# 4. global example: bounded Milnor set


@pytest.mark.slow
def test_c4_global_bounded(criterion):
    _, rep = builtin_report("milnor-global")
    sweep = rep["conditions"]["condition_b"]["sweep"]
    ok = (sweep["verdict"] == "bounded" and all(c == 0 for c in sweep["counts"])
          and min(sweep["radii"]) >= 2 and rep["conditions"]["fibration"] == "YES")
    criterion(4, ok, f"verdict {sweep['verdict']}, counts {sweep['counts']} at radii {sweep['radii']}, "
                     f"fibration {rep['conditions']['fibration']}")
    assert ok


# ---------------------------------------------------------------------------
# 5. toy scenario


@pytest.mark.slow
def test_c5_toy(criterion):
    _, rep = builtin_report("toy-xy-sphere")
    eul = rep["euler"]
    full = [e for e in rep["consistency"]["entries"] if e["identity"] == "full link difference"]
    fib = eul["fiber"]
    routes = {k: _value(fib[k]) for k in ("primary", "boundary", "oracle")}
    checks = {
        "chi(V_W(F))=2": _value(eul["links"]["1,2"]) == 2,
        "chi(V_W(f1))=0": _value(eul["links"]["1"]) == 0,
        "chi(M_F)=1": routes == {"primary": 1, "boundary": 1, "oracle": 1},
        "identity -2=-2": len(full) == 1 and (full[0]["lhs"], full[0]["rhs"]) == (-2, -2)
        and full[0]["status"].startswith("pass"),
    }
    for key in ("1", "2", "1,2"):
        link = eul["links"][key]
        if link.get("oracle") is not None:
            checks[f"oracle link {key}"] = _value(link["oracle"]) == _value(link)
    detail = "; ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items())
    criterion(5, all(checks.values()), f"{detail}; fiber routes {routes}")
    assert all(checks.values()), detail


# ---------------------------------------------------------------------------
# 6. parity engine


def test_c6_parity_exhaustive(criterion):
    recovered = raised = failures = 0
    for n, l, chi in itertools.product(range(2, 9), range(1, 5), range(-3, 4)):
        for chi_W in (-2, 0, 2):
            link = predict_link_chi(chi, chi_W, n, l)
            if l % 2:
                failures += invert_fiber_chi(link, chi_W, n, l) != chi
                recovered += 1
            else:
                try:
                    invert_fiber_chi(link, chi_W, n, l)
                    failures += 1
                except ParityError:
                    raised += 1
            # an odd gap between link and chi_W is never a valid input
            try:
                invert_fiber_chi(link + 1, chi_W, n, l)
                failures += 1
            except ParityError:
                raised += 1
    criterion(6, failures == 0, f"{recovered} inversions recovered, {raised} infeasible cases raised, "
                                f"{failures} failures")
    assert failures == 0


# ---------------------------------------------------------------------------
# 7. polar example audit


@pytest.mark.slow
def test_c7_polar_audit(criterion):
    _, rep = builtin_report("polar-mixed")
    cons = rep["consistency"]
    eul = rep["euler"]
    computed = [t for t in cons["triples"] if t["source"] == "computed"]
    good = [t for t in computed if t["chi_W"] == 0 and t["single_link_consistent"]]
    flags = [c["status"] for c in cons["paper_claims"]]
    checks = {
        "consistent triple": bool(good),
        "claims flagged": bool(flags) and all(s in ("agree", "dispute") for s in flags),
        "dispute flag": cons["disputed"] == any(s == "dispute" for s in flags),
        "inclusion-exclusion links": all(eul["links"][k]["provenance"] == "inclusion-exclusion"
                                         for k in ("1", "2", "1,2")),
        "boundary fiber": eul["fiber"]["boundary"]["provenance"] == "boundary",
    }
    detail = "; ".join(f"{k} {'ok' if v else 'BAD'}" for k, v in checks.items())
    t = good[0] if good else {}
    criterion(7, all(checks.values()),
              f"{detail}; triple (chi_W, link, fiber) = ({t.get('chi_W')}, {t.get('link')}, {t.get('fiber')}); "
              f"claims {flags}, disputed={cons['disputed']}")
    assert all(checks.values()), detail


# ---------------------------------------------------------------------------
# 8. determinism


def _verdicts(rep) -> dict:
    out = {}
    cond = rep.get("conditions")
    if cond:
        out["a"] = cond["condition_a"]["holds"]
        out["b"] = cond["condition_b"]["holds"]
        out["sweep"] = cond["condition_b"]["sweep"]["verdict"]
        out["fibration"] = cond["fibration"]
    eul = rep.get("euler")
    if eul:
        out["chi_W"] = _value(eul["chi_W"])
        out["links"] = {k: _value(v) for k, v in eul["links"].items()}
        out["fiber"] = {k: _value(eul["fiber"][k]) for k in ("primary", "boundary", "oracle")
                        if eul["fiber"].get(k) is not None}
    return out


@pytest.mark.slow
def test_c8_determinism(criterion):
    byte_mismatch = []
    with tempfile.TemporaryDirectory() as tmp:
        for name in BUILTIN_NAMES:
            first, _ = builtin_report(name)
            out = Path(tmp) / name
            run(builtin(name), seed=42, out_dir=out)
            if (out / "report.json").read_bytes() != first.encode("utf-8"):
                byte_mismatch.append(name)
    seed_mismatch = []
    for name in SEED_NAMES:
        ref = _verdicts(builtin_report(name, 42)[1])
        for seed in (43, 44):
            if _verdicts(builtin_report(name, seed)[1]) != ref:
                seed_mismatch.append(f"{name}@{seed}")
    ok = not byte_mismatch and not seed_mismatch
    criterion(8, ok, f"byte-identical reprints: {len(BUILTIN_NAMES) - len(byte_mismatch)}/{len(BUILTIN_NAMES)}; "
                     f"seed-stable verdicts: {'all' if not seed_mismatch else seed_mismatch}")
    assert not byte_mismatch, byte_mismatch
    assert not seed_mismatch, seed_mismatch
