"""Run a scenario: identities -> conditions -> euler -> consistency.

Outputs are a JSON report (deterministic for a given scenario and seed), a CSV
of every accepted solution sample and a plain-text summary.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from pathlib import Path
from types import SimpleNamespace
from typing import Any

import numpy as np

from . import __version__
from .algebra import (
    ChartError,
    chart_identity_residual,
    chart_matrix,
    is_zero_vector,
    milnor_equality_residual,
    normalized_gradient_exact,
    normalized_gradient_residual,
    normalized_gradient_tolerance,
    omega,
    vec_add,
)
from .euler import (
    EIG_TOL,
    MU_TOL,
    VALUE_SEP,
    MorseError,
    OracleError,
    ParityError,
    SingularVarietyError,
    choose_delta,
    chi_inclusion_exclusion,
    curve_oracle,
    curve_system,
    morse_boundary,
    morse_closed,
    predict_link_chi,
    single_link_fiber,
    value_range,
)
from .numsolve import (
    HEURISTIC_NOTE,
    TOLERANCES,
    SolutionSet,
    condition_a,
    condition_verdicts,
    multistart_solve,
    radius_sweep,
    sample_starts,
)
from .polyring import CompiledPolys, PolyMap, parse_polynomial
from .scenario import Scenario, index_key
from .systems import Inequation, PolySystem, WorldSpec, drop_component, rho, sigma_Fbar_charts

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"
IDENTITY_POINTS = 20
CHART_REL_TOL = 1e-9


@dataclass
class RunResult:
    report: dict
    csv_text: str
    text: str
    exit_code: int
    json_text: str = ""


def _clean(obj: Any) -> Any:
    """JSON-safe copy with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return _clean(float(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    return obj


def _subsets(p: int):
    for size in range(1, p + 1):
        yield from combinations(range(1, p + 1), size)


# ---------------------------------------------------------------------------
# identities


def _world_points(W: WorldSpec, n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    if W.is_sphere:
        return sample_starts("sphere", n, W.num_vars, W.sample_radius, rng)
    system = PolySystem(tuple(W.constraints), (), 0, "W", n_world=W.k, radius=W.sample_radius)
    return multistart_solve(system, "box", 4 * n, seed, W.sample_radius).array(W.num_vars)[:n]


def identity_checks(F: PolyMap, W: WorldSpec, seed: int, n_points: int = IDENTITY_POINTS) -> list[dict]:
    out = []
    p = F.p
    pairs = list(combinations(range(1, p + 1), 2))
    bad = [(i, j) for i, j in pairs if not is_zero_vector(vec_add(omega(F, i, j), omega(F, j, i)))]
    out.append({"name": "omega antisymmetry", "kind": "symbolic", "cases": len(pairs),
                "failures": len(bad), "pass": not bad})
    if p >= 3:
        triples = list(combinations(range(1, p + 1), 3))
        bad = [t for t in triples if not is_zero_vector(milnor_equality_residual(F, *t))]
        out.append({"name": "Milnor equality", "kind": "symbolic", "cases": len(triples),
                    "failures": len(bad), "pass": not bad})
    else:
        out.append({"name": "Milnor equality", "kind": "symbolic", "cases": 0, "failures": 0,
                    "pass": True, "note": "needs p >= 3"})
    bad = [j for j in range(1, p + 1) if not is_zero_vector(normalized_gradient_exact(F, j))]
    out.append({"name": "normalized gradient (cleared form)", "kind": "symbolic", "cases": p,
                "failures": len(bad), "pass": not bad})
    pts = _world_points(W, n_points, seed + 501)
    worst, cases, fails = 0.0, 0, 0
    for x in pts:
        for j in range(1, p + 1):
            try:
                r = normalized_gradient_residual(F, j, x)
            except ChartError:
                continue
            tol = normalized_gradient_tolerance(F, x)
            cases += 1
            worst = max(worst, r / tol)
            fails += r > tol
    out.append({"name": "normalized gradient (numeric)", "kind": "numeric", "cases": cases,
                "failures": fails, "pass": fails == 0, "max_residual_over_tolerance": worst})
    det_f = eig_f = sym_f = rep_f = cases = 0
    worst_rep = 0.0
    for x in pts:
        for i in range(1, p + 1):
            try:
                cm = chart_matrix(F, i, x)
                rep = chart_identity_residual(F, i, x)
            except ChartError:
                continue
            cases += 1
            det_f += not cm.det_check
            eig_f += not cm.eigen_check
            sym_f += not cm.symmetric
            rep_f += rep > CHART_REL_TOL
            worst_rep = max(worst_rep, rep)
    total = det_f + eig_f + sym_f + rep_f
    out.append({"name": "chart matrices", "kind": "numeric", "cases": cases,
                "failures": total, "pass": total == 0,
                "det_failures": det_f, "eigen_failures": eig_f, "symmetry_failures": sym_f,
                "representation_failures": rep_f, "max_representation_residual": worst_rep})
    return out


# ---------------------------------------------------------------------------
# conditions


def _witness_residuals(checks: dict, names, witnesses) -> dict:
    out = {}
    for label, texts in sorted(checks.items()):
        polys = [parse_polynomial(t, names) for t in texts]
        cp = CompiledPolys(polys)
        if not witnesses:
            out[label] = {"witnesses": 0}
            continue
        X = np.array(witnesses)
        vals = np.abs(cp.values(X))
        U = np.maximum(np.abs(X), np.linalg.norm(X, axis=1, keepdims=True))
        rel = vals / np.maximum(cp.term_scale(U), 1e-300)
        absr = vals.max(axis=1)
        relr = rel.max(axis=1)
        out[label] = {"witnesses": len(X), "max_abs_residual": float(absr.max()),
                      "min_abs_residual": float(absr.min()),
                      "max_rel_residual": float(relr.max()), "min_rel_residual": float(relr.min())}
    return out


def _seed_stability(F: PolyMap, W: WorldSpec, radius, n_starts: int, seed: int) -> dict:
    Wr = W.at_radius(radius) if W.is_sphere else W
    counts = []
    for s in (seed, seed + 1, seed + 2):
        total = 0
        for system in sigma_Fbar_charts(F, Wr):
            total += len(multistart_solve(system, "sphere" if Wr.is_sphere else "box", n_starts, s,
                                          Wr.sample_radius))
        counts.append(total)
    stable = len(set(counts)) == 1
    return {"radius": float(radius), "seeds": [seed, seed + 1, seed + 2], "sigma_Fbar_counts": counts,
            "stable": stable, "flag": None if stable else "coverage unstable"}


def _drop_coherence(F: PolyMap, W: WorldSpec, radii, n_starts: int, seed: int, names=None) -> dict:
    G = drop_component(F)
    ca = condition_a(G, W, radii, n_starts, seed + 11)
    if G.p >= 2:
        sweep = radius_sweep(lambda r: sigma_Fbar_charts(G, W.at_radius(r) if W.is_sphere else W),
                             radii, W.mode, n_starts, seed + 13)
        b = sweep.verdict in ("empty", "bounded")
        b_note = f"sweep verdict {sweep.verdict}"
    else:
        b = True
        b_note = "G has one component: G/|G| takes values in S^0 and is locally constant off V(G)"
    return {"G": G.to_strings(names), "a_holds": ca.holds, "b_holds": b, "b_note": b_note,
            "coherent": bool(ca.holds and b), "condition_a": ca.to_dict()}


def conditions_task(scn: Scenario, seed: int, n_starts: int, sets: list) -> dict:
    F, W = scn.F, scn.world
    radii = [float(r) for r in scn.radii]
    cv = condition_verdicts(F, W, radii, n_starts, seed)
    sets.extend(cv.condition_a.solution_sets)
    sets.extend(cv.condition_b.solution_sets)
    out = cv.to_dict()
    out["seed_stability"] = _seed_stability(F, W, scn.radii[0], n_starts, seed + 777)
    if scn.witness_checks:
        per = []
        for pr in cv.condition_b.probes:
            per.append({"radius": pr.radius, "witnesses": [list(w) for w in pr.witnesses],
                        "checks": _witness_residuals(scn.witness_checks, scn.variables, pr.witnesses)})
        out["witness_checks"] = per
    if cv.a_holds and cv.b_holds and F.p >= 2:
        out["drop_coherence"] = _drop_coherence(F, W, radii, n_starts, seed, scn.variables)
    out["_verdicts"] = (cv.a_holds, cv.b_holds)
    return out


# ---------------------------------------------------------------------------
# euler


def _entry(value, provenance: str, **detail) -> dict:
    d = {"value": value, "provenance": provenance}
    d.update(detail)
    return d


def _try(fn, provenance: str, **detail) -> dict:
    try:
        res = fn()
    except (MorseError, OracleError) as exc:
        return _entry(None, provenance, error=f"{type(exc).__name__}: {exc}", **detail)
    if hasattr(res, "to_dict"):
        return _entry(res.chi, provenance, **detail, **{"morse": res.to_dict()})
    return _entry(res.chi, provenance, **detail)


def euler_task(scn: Scenario, seed: int, chi_starts: int) -> dict:
    F, W = scn.F, scn.world
    p, N = F.p, F.num_vars
    n = W.n
    out: dict[str, Any] = {"radius": float(W.sample_radius), "n": n, "p": p}
    out["chi_W"] = _try(lambda: morse_closed([], W, seed, chi_starts), "morse", set="W")
    links = {}
    if p <= 4:
        for I in _subsets(p):
            key = index_key(I)
            cons = [F[i - 1] for i in I]
            label = f"V_W(f_{{{key}}})"
            try:
                res = morse_closed(cons, W, seed + 3 * len(links), chi_starts)
                e = _entry(res.chi, "morse", set=label, morse=res.to_dict())
                if N - W.k - len(I) == 1:
                    try:
                        orc = curve_oracle(curve_system(cons, W), W.sample_radius, seed=seed)
                        e["oracle"] = _entry(orc.chi, "oracle", arcs=orc.arcs, loops=orc.loops)
                    except OracleError as exc:
                        e["oracle"] = _entry(None, "oracle", error=str(exc))
            except SingularVarietyError as exc:
                if key in scn.link_pieces:
                    pieces = [[parse_polynomial(t, scn.variables) for t in piece]
                              for piece in scn.link_pieces[key]]
                    ie = chi_inclusion_exclusion(pieces, W, seed, chi_starts)
                    e = _entry(ie.chi, "inclusion-exclusion", set=label, singular=str(exc),
                               pieces=scn.link_pieces[key],
                               terms=[{"pieces": list(c), "chi": v} for c, v in ie.terms])
                else:
                    e = _entry(None, "morse", set=label, error=f"singular variety and no declared pieces: {exc}")
            except MorseError as exc:
                e = _entry(None, "morse", set=label, error=str(exc))
            links[key] = e
    out["links"] = links
    chi_W = out["chi_W"]["value"]
    # fiber by inversion from every single-component link
    inv = {}
    for j in range(1, p + 1):
        lj = links.get(str(j), {}).get("value")
        if lj is None or chi_W is None:
            continue
        try:
            inv[str(j)] = _entry(single_link_fiber(lj, chi_W, n), "inverted", from_link=str(j))
        except ParityError as exc:
            inv[str(j)] = _entry(None, "inverted", error=str(exc))
    fiber: dict[str, Any] = {"inverted": inv}
    primary = next((e for e in inv.values() if e["value"] is not None), None)
    fiber["primary"] = primary
    # fiber by Morse on M_F^delta
    try:
        dc = choose_delta(F, W, 1, 1, True, seed, chi_starts)
    except MorseError as exc:
        dc = None
        fiber["boundary"] = _entry(None, "boundary", error=str(exc))
    if dc is not None:
        if dc.delta is None:
            fiber["boundary"] = _entry(None, "boundary", error="no admissible delta on the grid")
        else:
            d = Fraction(dc.delta).limit_denominator(10 ** 9)
            fiber["boundary"] = _try(lambda: morse_boundary(list(F)[1:], F[0], d, W, seed, chi_starts),
                                     "boundary", delta=float(d), delta_table=dc.table,
                                     set="{f_1 >= delta, f_2 = ... = f_p = 0} on W")
    if N - W.k - (p - 1) == 1:
        try:
            orc = curve_oracle(curve_system(list(F)[1:], W, [Inequation(F[0], "gt")]), W.sample_radius,
                               seed=seed)
            fiber["oracle"] = _entry(orc.chi, "oracle", arcs=orc.arcs, loops=orc.loops, samples=orc.samples)
        except OracleError as exc:
            fiber["oracle"] = _entry(None, "oracle", error=str(exc))
    out["fiber"] = fiber
    # M_G and the one-component fibers
    if p >= 2:
        G = drop_component(F)
        dcg = choose_delta(G, W, 1, 1, True, seed + 1, chi_starts)
        if dcg.delta is not None:
            d = Fraction(dcg.delta).limit_denominator(10 ** 9)
            out["fiber_G"] = _try(lambda: morse_boundary(list(G)[1:], G[0], d, W, seed + 1, chi_starts),
                                  "boundary", delta=float(d), G=G.to_strings(scn.variables))
        else:
            out["fiber_G"] = _entry(None, "boundary", error="no admissible delta on the grid")
    half = {}
    for j in range(1, p + 1):
        for sign, tag in ((1, "+"), (-1, "-")):
            dcj = choose_delta(F, W, j, sign, False, seed + 2 * j, chi_starts)
            if dcj.delta is None:
                half[f"{j}{tag}"] = _entry(None, "boundary", error="no admissible delta on the grid")
                continue
            d = Fraction(dcj.delta).limit_denominator(10 ** 9)
            g = F[j - 1] * sign
            half[f"{j}{tag}"] = _try(lambda g=g, d=d: morse_boundary([], g, d, W, seed + 2 * j, chi_starts),
                                     "boundary", delta=float(d), set=f"{{{tag}f_{j} > 0}} on W")
    out["half_spaces"] = half
    if W.mode == "local" and W.is_sphere:
        eps = W.sample_radius
        eta = Fraction(1, 100) * Fraction(value_range(F[0], [], W, seed=seed)).limit_denominator(10 ** 6)
        cons = [F[0] - eta] + list(F)[1:]
        ball = Fraction(W.radius) ** 2 - rho(N)
        out["tube_fiber"] = _try(lambda: morse_boundary(cons, ball, 0, None, seed, chi_starts, radius=eps),
                                 "boundary", eta=float(eta), set="B_eps ∩ F^-1(eta, 0, ..., 0)")
    return out


# ---------------------------------------------------------------------------
# consistency


def _val(e):
    return None if e is None else e.get("value")


def consistency_task(scn: Scenario, eul: dict, verdicts: tuple | None) -> dict:
    F, W = scn.F, scn.world
    p, n = F.p, W.n
    chi_W = _val(eul.get("chi_W"))
    links = eul.get("links", {})
    fiber = eul.get("fiber", {})
    mf_b = _val(fiber.get("boundary"))
    mf_inv = _val(fiber.get("primary"))
    mf = mf_b if mf_b is not None else mf_inv
    mf_src = "chi(M_F)[boundary]" if mf_b is not None else "chi(M_F)[inverted]"
    hyp = verdicts is None or all(verdicts)
    hyp_note = ("conditions not run" if verdicts is None else
                "conditions (a) and (b) hold" if hyp else "conditions (a)/(b) not both verified: informational")
    entries = []

    def link(I):
        if not I:
            return chi_W, "chi(W)"
        e = links.get(index_key(I))
        return _val(e), f"chi(V_W(f_{{{index_key(I)}}}))[{e['provenance'] if e else '?'}]"

    def singular(I):
        e = links.get(index_key(I)) if I else None
        return bool(e and e.get("provenance") == "inclusion-exclusion")

    def add(name, lhs, rhs, inputs, informational=False):
        if lhs is None or rhs is None:
            entries.append({"identity": name, "status": "skipped", "inputs": inputs,
                            "reason": "missing input"})
            return
        status = "pass" if lhs == rhs else "fail"
        if informational or not hyp:
            status = f"{status} (informational)"
        entries.append({"identity": name, "lhs": lhs, "rhs": rhs, "status": status, "inputs": inputs})

    full = tuple(range(1, p + 1))
    if p >= 2:
        vg, sg = link(full[:-1])
        vf, sf = link(full)
        add("full link difference", None if vg is None or vf is None else vg - vf,
            None if mf is None else (-1) ** (n - p) * 2 * mf, [sg, sf, mf_src],
            singular(full[:-1]) or singular(full))
    for I in _subsets(p):
        J = I[:-1]
        vj, sj = link(J)
        vi, si = link(I)
        l = len(I)
        add(f"link difference I={{{index_key(I)}}} J={{{index_key(J)}}}",
            None if vj is None or vi is None else vj - vi,
            None if mf is None else (-1) ** (n - l) * 2 * mf, [sj, si, mf_src],
            singular(I) or singular(J))
    for j in range(1, p + 1):
        vj, sj = link((j,))
        add(f"single link parity j={j}", vj, None if mf is None or chi_W is None else chi_W - (-1) ** (n - 1) * 2 * mf,
            [sj, "chi(W)", mf_src], singular((j,)))
    if p >= 3:
        for I in _subsets(p):
            if len(I) < 3:
                continue
            for K in combinations(I, len(I) - 2):
                vk, sk = link(K)
                vi, si = link(I)
                add(f"link parity K={{{index_key(K)}}} I={{{index_key(I)}}}", vk, vi, [sk, si],
                    singular(K) or singular(I))
    else:
        entries.append({"identity": "link parity", "status": "not applicable", "reason": "needs p >= 3"})
    for I in _subsets(p):
        vi, si = link(I)
        pred = None if mf is None or chi_W is None else predict_link_chi(mf, chi_W, n, len(I))
        add(f"link prediction I={{{index_key(I)}}}", vi, pred, [si, "chi(W)", mf_src], singular(I))
    if "fiber_G" in eul:
        add("drop projection chi(M_G) = chi(M_F)", _val(eul["fiber_G"]), mf, ["chi(M_G)[boundary]", mf_src])
    for key, e in sorted(eul.get("half_spaces", {}).items()):
        j, sign = key[:-1], key[-1]
        name = "carpeting"
        add(f"{name} chi(M_{{f_{j}}}^{sign}) = chi(M_F)", _val(e), mf,
            [f"chi(M_{{f_{j}}}^{sign})[boundary]", mf_src])
    if "tube_fiber" in eul:
        add("tube fiber = sphere fiber", _val(eul["tube_fiber"]), mf,
            ["chi(tube fiber)[boundary]", mf_src])
    # oracle agreements
    routes = {k: _val(fiber.get(k)) for k in ("boundary", "oracle")}
    routes["inverted"] = mf_inv
    vals = {k: v for k, v in routes.items() if v is not None}
    entries.append({"identity": "fiber routes agree", "status": "pass" if len(set(vals.values())) <= 1 else "fail",
                    "values": vals, "inputs": [f"chi(M_F)[{k}]" for k in sorted(vals)]})
    for key, e in sorted(links.items()):
        if "oracle" in e and e["oracle"]["value"] is not None and e["value"] is not None:
            add(f"link oracle agreement {{{key}}}", e["value"], e["oracle"]["value"],
                [f"chi(V_W(f_{{{key}}}))[morse]", f"chi(V_W(f_{{{key}}}))[oracle]"])
    failures = sum(1 for e in entries if e["status"] == "fail")
    # published claims recorded in the scenario
    claims = []
    pc = scn.paper_claims
    if "fiber_chi" in pc:
        comp = mf_inv if mf_inv is not None else mf
        claims.append({"quantity": "chi(M_F)", "paper": pc["fiber_chi"], "computed": comp,
                       "provenance": "paper-claimed",
                       "status": "agree" if comp == pc["fiber_chi"] else "dispute"})
    for key, v in sorted(pc.get("link_chi", {}).items()):
        comp = _val(links.get(key))
        claims.append({"quantity": f"chi(V_W(f_{{{key}}}))", "paper": v, "computed": comp,
                       "provenance": "paper-claimed", "status": "agree" if comp == v else "dispute"})
    triples = []
    for j in range(1, p + 1):
        lj = _val(links.get(str(j)))
        if lj is None or chi_W is None or mf is None:
            continue
        triples.append({"source": "computed", "chi_W": chi_W, "link": lj, "link_index": j, "fiber": mf,
                        "single_link_consistent": lj == chi_W - (-1) ** (n - 1) * 2 * mf})
    for key, v in sorted(pc.get("link_chi", {}).items()):
        if "fiber_chi" in pc and chi_W is not None and "," not in key:
            triples.append({"source": "paper-claimed", "chi_W": chi_W, "link": v, "link_index": int(key),
                            "fiber": pc["fiber_chi"],
                            "single_link_consistent": v == chi_W - (-1) ** (n - 1) * 2 * pc["fiber_chi"]})
    return {"hypotheses": hyp_note, "entries": entries, "failures": failures,
            "paper_claims": claims, "disputed": any(c["status"] == "dispute" for c in claims),
            "triples": triples}


def consistency_report(F: PolyMap, W: WorldSpec, chi_W: int, links: dict, fiber: int | None = None,
                       fiber_inverted: int | None = None, fiber_G: int | None = None,
                       half_spaces: dict | None = None, claims: dict | None = None,
                       verdicts: tuple | None = None, provenance: str = "morse") -> dict:
    """Audit precomputed characteristics without running any solver.

    ``links`` maps index keys such as "1" or "1,2" to integers; ``fiber`` is
    the boundary-route chi(M_F); ``half_spaces`` maps keys like "1+" to
    integers; ``claims`` uses the scenario field layout.
    """
    def entry(v, prov=provenance):
        return None if v is None else {"value": int(v), "provenance": prov}

    eul = {"chi_W": entry(chi_W), "links": {k: entry(v) for k, v in links.items()},
           "fiber": {"boundary": entry(fiber, "boundary"), "primary": entry(fiber_inverted, "inverted")}}
    if fiber_G is not None:
        eul["fiber_G"] = entry(fiber_G, "boundary")
    if half_spaces:
        eul["half_spaces"] = {k: entry(v, "boundary") for k, v in half_spaces.items()}
    scn = SimpleNamespace(F=F, world=W, paper_claims=dict(claims or {}))
    return consistency_task(scn, eul, verdicts)


# ---------------------------------------------------------------------------
# assembly


def _csv(sets: list[SolutionSet], names: list[str]) -> tuple[str, list[dict]]:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(names) + ["residual", "basin_count"])
    index = []
    row = 0
    N = len(names)
    for s in sets:
        start = row
        for pt in s.points:
            w.writerow([f"{v:.17g}" for v in pt.coords[:N]] + [f"{pt.residual:.6e}", pt.basin_count])
            row += 1
        index.append({"set": s.tag, "radius": s.radius, "seed": s.seed, "n_starts": s.n_starts,
                      "rows": [start, row], "accepted_starts": s.n_accepted})
    return buf.getvalue(), index


def _tolerances() -> dict:
    t = dict(TOLERANCES)
    t.update({"morse_eigenvalue": EIG_TOL, "critical_value_separation": VALUE_SEP,
              "boundary_multiplier": MU_TOL, "chart_representation_rel": CHART_REL_TOL,
              "normalized_gradient": "1e-9 * (1 + |x|)^(2d)"})
    return t


def run(scn: Scenario, seed: int | None = None, n_starts: int | None = None,
        out_dir: str | Path | None = None) -> RunResult:
    seed = scn.seed if seed is None else seed
    n_starts = scn.n_starts if n_starts is None else n_starts
    chi_starts = scn.chi_starts
    report: dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "tool": {"name": "openbook", "version": __version__},
        "scenario": scn.echo(),
        "seed": seed,
        "n_starts": n_starts,
        "chi_starts": chi_starts,
        "tolerances": _tolerances(),
        "heuristic_note": HEURISTIC_NOTE,
        "tasks_run": [t for t in ("identities", "conditions", "euler", "consistency") if t in scn.tasks],
    }
    sets: list[SolutionSet] = []
    exit_code = 0
    verdicts = None
    if "identities" in scn.tasks:
        checks = identity_checks(scn.F, scn.world, seed)
        report["identities"] = {"checks": checks, "all_pass": all(c["pass"] for c in checks)}
        if not report["identities"]["all_pass"]:
            exit_code = 1
    if "conditions" in scn.tasks:
        cond = conditions_task(scn, seed, n_starts, sets)
        verdicts = cond.pop("_verdicts")
        report["conditions"] = cond
    eul = None
    if "euler" in scn.tasks or "consistency" in scn.tasks:
        eul = euler_task(scn, seed, chi_starts)
        report["euler"] = eul
    if "consistency" in scn.tasks and eul is not None:
        report["consistency"] = consistency_task(scn, eul, verdicts)
    csv_text, index = _csv(sets, scn.variables)
    report["solutions_index"] = index
    report = _clean(report)
    json_text = json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    text = render_text(report)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(json_text)
        (out / "solutions.csv").write_text(csv_text)
        (out / "report.txt").write_text(text)
    return RunResult(report, csv_text, text, exit_code, json_text)


def render_text(report: dict) -> str:
    lines = []
    scn = report["scenario"]
    lines.append(f"scenario {scn['name']}  seed {report['seed']}  starts {report['n_starts']}")
    lines.append(f"map {scn['map']} on {scn['world']['type']}")
    if "identities" in report:
        lines.append("")
        lines.append("identities")
        for c in report["identities"]["checks"]:
            lines.append(f"  {'PASS' if c['pass'] else 'FAIL'}  {c['name']:<38} cases {c['cases']:>4}  failures {c['failures']}")
    if "conditions" in report:
        c = report["conditions"]
        sw = c["condition_b"]["sweep"]
        lines.append("")
        lines.append(f"conditions ({c['label']}, {c['heuristic']})")
        lines.append(f"  (a) {'holds' if c['condition_a']['holds'] else 'fails'}"
                     f"  min distance Sigma->V per radius: {c['condition_a']['min_distance_sigma_to_V']}")
        lines.append(f"  (b) {'holds' if c['condition_b']['holds'] else 'fails'}  sweep {sw['verdict']}"
                     f"  counts {sw['counts']}  radii {sw['radii']}")
        lines.append(f"  fibration: {c['fibration']}")
        st = c.get("seed_stability")
        if st and st.get("flag"):
            lines.append(f"  warning: {st['flag']} {st['sigma_Fbar_counts']}")
        for w in c.get("witness_checks", []):
            for label, r in w["checks"].items():
                if r.get("witnesses"):
                    lines.append(f"  r={w['radius']:<8g} {label:<30} abs residual {r['min_abs_residual']:.3g}..{r['max_abs_residual']:.3g}")
        if "drop_coherence" in c:
            lines.append(f"  drop coherence (G = {c['drop_coherence']['G']}): {c['drop_coherence']['coherent']}")
    if "euler" in report:
        e = report["euler"]
        lines.append("")
        lines.append(f"euler characteristics at radius {e['radius']:g} (n={e['n']}, p={e['p']})")
        lines.append(f"  {'chi(W)':<28} {str(e['chi_W']['value']):>5}  {e['chi_W']['provenance']}")
        for k, v in e["links"].items():
            extra = f"  oracle {v['oracle']['value']}" if "oracle" in v else ""
            lines.append(f"  {'chi(V_W(f_{' + k + '}))':<28} {str(v['value']):>5}  {v['provenance']}{extra}")
        fb = e["fiber"]
        for k in ("primary", "boundary", "oracle"):
            if fb.get(k):
                lines.append(f"  {'chi(M_F) ' + k:<28} {str(fb[k]['value']):>5}  {fb[k]['provenance']}")
        if "fiber_G" in e:
            lines.append(f"  {'chi(M_G)':<28} {str(e['fiber_G']['value']):>5}  boundary")
        for k, v in e["half_spaces"].items():
            lines.append(f"  {'chi(M_f' + k + ')':<28} {str(v['value']):>5}  boundary")
        if "tube_fiber" in e:
            lines.append(f"  {'chi(tube fiber)':<28} {str(e['tube_fiber']['value']):>5}  boundary")
    if "consistency" in report:
        c = report["consistency"]
        lines.append("")
        lines.append(f"consistency ({c['hypotheses']})")
        for en in c["entries"]:
            sides = f"{en['lhs']} vs {en['rhs']}" if "lhs" in en else en.get("reason", "")
            if "values" in en:
                sides = str(en["values"])
            lines.append(f"  {en['status']:<22} {en['identity']:<44} {sides}")
        for cl in c["paper_claims"]:
            lines.append(f"  paper claim {cl['quantity']}: paper {cl['paper']}, computed {cl['computed']} -> {cl['status']}")
        for t in c["triples"]:
            lines.append(f"  triple ({t['source']}) chi_W={t['chi_W']} link_{t['link_index']}={t['link']} "
                         f"fiber={t['fiber']}  consistent: {t['single_link_consistent']}")
    return "\n".join(lines) + "\n"
