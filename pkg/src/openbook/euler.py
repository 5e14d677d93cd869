"""Euler characteristics by critical-point counting, plus the parity engine.

Closed varieties: chi = sum over critical points of (-1)^index for a generic
linear functional.  Regions {g >= delta} add boundary critical points whose
multiplier is positive (the functional points into the region).  A separate
brute-force oracle links dense samples of a curve into polylines and counts
arcs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .algebra import numeric_rank
from .numsolve import (
    compiled,
    multistart_solve,
    sample_starts,
    solve_from,
)
from .polyring import CompiledPolys, Polynomial, PolyMap
from .systems import Inequation, PolySystem, WorldSpec, carpeting_system, lagrange_system

log = logging.getLogger(__name__)

EIG_TOL = 1e-6
VALUE_SEP = 1e-8
MU_TOL = 1e-8
MAX_REDRAWS = 5
REGULAR_SAMPLES = 200
DELTA_GRID = (0.1, 0.01, 0.001)


class MorseError(RuntimeError):
    """Degenerate functional after all redraws, or unstable critical-point counts."""


class SingularVarietyError(MorseError):
    """Regularity sampling found a point where the constraint Jacobian drops rank."""


class ParityError(ValueError):
    """The parity table admits no integer fiber characteristic for these inputs."""


class OracleError(RuntimeError):
    """The curve oracle could not link its samples unambiguously."""


@dataclass
class MorseRecord:
    point: tuple[float, ...]
    value: float
    index: int
    location: str  # "interior" or "boundary-inward"


@dataclass
class MorseResult:
    chi: int
    dim: int
    records: list[MorseRecord]
    functional: tuple[float, ...] | None
    redraws: int
    provenance: str
    notes: list[str] = field(default_factory=list)
    excluded_outward: int = 0

    def to_dict(self) -> dict:
        return {
            "chi": self.chi,
            "dim": self.dim,
            "provenance": self.provenance,
            "critical_points": len(self.records),
            "indices": sorted(r.index for r in self.records),
            "outward_boundary_points": self.excluded_outward,
            "redraws": self.redraws,
            "notes": list(self.notes),
        }


# ---------------------------------------------------------------------------
# helpers


def _ambient(constraints: Sequence[Polynomial], W: WorldSpec | None) -> list[Polynomial]:
    return (list(W.constraints) if W is not None else []) + list(constraints)


def _linear(coeffs: np.ndarray, num_vars: int) -> Polynomial:
    out = Polynomial.zero(num_vars)
    for i, c in enumerate(coeffs):
        out = out + Polynomial.variable(num_vars, i).scale(Fraction(float(c)))
    return out


class _Hessians:
    def __init__(self, polys: Sequence[Polynomial]):
        self.polys = list(polys)
        N = polys[0].num_vars if polys else 0
        self.N = N
        self.grad = CompiledPolys([p.differentiate(i) for p in polys for i in range(N)], N) if polys else None
        second = []
        for p in polys:
            for i in range(N):
                di = p.differentiate(i)
                for j in range(N):
                    second.append(di.differentiate(j))
        self.hess = CompiledPolys(second, N) if polys else None

    def jac(self, x: np.ndarray) -> np.ndarray:
        return self.grad.values(x[None, :])[0].reshape(len(self.polys), self.N)

    def hessians(self, x: np.ndarray) -> np.ndarray:
        return self.hess.values(x[None, :])[0].reshape(len(self.polys), self.N, self.N)

    def jac_scale(self, x: np.ndarray) -> np.ndarray:
        U = np.maximum(np.abs(x), np.linalg.norm(x))[None, :]
        return self.grad.term_scale(U)[0].reshape(len(self.polys), self.N)


def _jac_rank(H: _Hessians, x: np.ndarray) -> int:
    J = H.jac(x)
    S = H.jac_scale(x)
    rows = []
    for r, s in zip(J, S):
        m = max(float(np.max(s)), 1e-300)
        rows.append(r / m)
    return numeric_rank(np.array(rows), rel=1e-7, abs_floor=1e-12)


def regularity_sample(constraints: Sequence[Polynomial], W: WorldSpec | None = None,
                      n: int = REGULAR_SAMPLES, seed: int = 42,
                      radius: float | None = None, sampler: str = "sphere") -> tuple[bool, int, tuple | None]:
    """Sample the variety and check that its constraint Jacobian has full rank.

    Returns (regular, samples checked, first singular sample).
    """
    polys = _ambient(constraints, W)
    r = radius if radius is not None else (W.sample_radius if W is not None else None)
    system = PolySystem(tuple(polys), (), 0, "regularity", radius=r)
    sol = multistart_solve(system, sampler, n, seed, r)
    H = _Hessians(polys)
    m = len(polys)
    for p in sol.points:
        x = np.array(p.coords)
        if _jac_rank(H, x) < m:
            return False, len(sol), p.coords
    return True, len(sol), None


# ---------------------------------------------------------------------------
# Morse counting


class _Degenerate(Exception):
    pass


def _morse_points(polys: list[Polynomial], coeffs: np.ndarray, radius: float, sampler: str,
                  n_starts: int, seed: int, inequations=(), region_scale: float | None = None):
    """Critical points of the linear functional on {polys = 0} with Morse data.

    Returns a list of (x, multipliers, value, index).  Raises _Degenerate.
    """
    N = polys[0].num_vars
    m = len(polys)
    obj = _linear(coeffs, N)
    base = lagrange_system(polys, obj)
    ineq = tuple(Inequation(q.poly.extend(m), q.kind) for q in inequations)
    system = replace(base, inequations=ineq, radius=radius)
    sol = multistart_solve(system, sampler, n_starts, seed, radius)
    H = _Hessians(polys)
    cnorm = float(np.linalg.norm(coeffs))
    out = []
    for p in sol.points:
        z = np.array(p.coords)
        x, lam = z[:N], z[N:]
        J = H.jac(x)
        if _jac_rank(H, x) < m:
            raise _Degenerate("constraint Jacobian drops rank at a critical point")
        Hs = H.hessians(x)
        HL = -np.einsum("i,ijk->jk", lam, Hs)
        _, s, Vt = np.linalg.svd(J)
        T = Vt[m:].T
        idx = 0
        if T.shape[1]:
            Hp = T.T @ HL @ T
            eig = np.linalg.eigvalsh((Hp + Hp.T) / 2)
            scale = max(float(np.linalg.norm(HL, 2)), cnorm / max(radius, 1e-300))
            if np.min(np.abs(eig)) < EIG_TOL * scale:
                raise _Degenerate("near-zero Hessian eigenvalue")
            idx = int(np.sum(eig < 0))
        out.append((x, lam, float(coeffs @ x), idx))
    vals = sorted(v for _, _, v, _ in out)
    scale = cnorm * max(radius, 1.0)
    for a, b in zip(vals, vals[1:]):
        if b - a < VALUE_SEP * scale:
            raise _Degenerate("critical values too close")
    return out, sol


def _count_points(polys, radius, sampler, n_starts, seed, inequations=()):
    system = PolySystem(tuple(polys), tuple(inequations), 0, "points", radius=radius)
    return multistart_solve(system, sampler, n_starts, seed, radius)


def _stable(run, n_starts: int, seed: int):
    """Run a critical-point search under two seeds; retry with more starts on mismatch."""
    a = run(n_starts, seed)
    b = run(n_starts, seed + 1)
    if len(a[0]) == len(b[0]):
        return a, None
    a = run(3 * n_starts, seed + 2)
    b = run(3 * n_starts, seed + 3)
    if len(a[0]) == len(b[0]):
        return a, f"counts stabilized after raising starts to {3 * n_starts}"
    raise MorseError(f"suspected missed critical points: {len(a[0])} vs {len(b[0])} under two seeds")


def morse_closed(constraints: Sequence[Polynomial], W: WorldSpec | None, seed: int = 42,
                 n_starts: int = 400, radius: float | None = None, check_regular: bool = True) -> MorseResult:
    """Euler characteristic of the compact variety W ∩ {constraints = 0}."""
    polys = _ambient(constraints, W)
    if not polys:
        raise ValueError("nothing to count: no constraints")
    N = polys[0].num_vars
    d = N - len(polys)
    if d < 0:
        raise ValueError("more constraints than variables")
    r = radius if radius is not None else W.sample_radius
    sampler = "sphere" if (W is not None and W.is_sphere) else "ball"
    notes = []
    if check_regular:
        ok, n_chk, bad = regularity_sample(constraints, W, REGULAR_SAMPLES, seed, r, sampler)
        if not ok:
            raise SingularVarietyError(f"variety is singular near {tuple(round(v, 6) for v in bad)}")
        notes.append(f"regularity sampled at {n_chk} points")
    if d == 0:
        def run(n, s):
            sol = _count_points(polys, r, sampler, n, s)
            return sol.points, sol
        (pts, _), note = _stable(run, n_starts, seed)
        if note:
            notes.append(note)
        recs = [MorseRecord(p.coords, 0.0, 0, "interior") for p in pts]
        return MorseResult(len(recs), 0, recs, None, 0, "morse", notes)
    rng = np.random.default_rng(seed + 1009)
    for attempt in range(MAX_REDRAWS + 1):
        coeffs = rng.uniform(-1.0, 1.0, N)
        try:
            def run(n, s):
                return _morse_points(polys, coeffs, r, sampler, n, s)
            (pts, _), note = _stable(run, n_starts, seed + 17 * attempt)
        except _Degenerate as exc:
            notes.append(f"redraw {attempt + 1}: {exc}")
            continue
        if note:
            notes.append(note)
        recs = [MorseRecord(tuple(float(v) for v in x), val, idx, "interior") for x, _, val, idx in pts]
        chi = sum((-1) ** rec.index for rec in recs)
        if d % 2 == 1 and chi != 0:
            raise MorseError(f"odd-dimensional closed variety gave chi = {chi}; critical points were missed")
        return MorseResult(chi, d, recs, tuple(float(c) for c in coeffs), attempt, "morse", notes)
    raise MorseError(f"functional stayed degenerate after {MAX_REDRAWS} redraws")


def morse_chi_closed(constraints: Sequence[Polynomial], W: WorldSpec | None, seed: int = 42,
                     n_starts: int = 400) -> int:
    return morse_closed(constraints, W, seed, n_starts).chi


def morse_boundary(constraints: Sequence[Polynomial], g: Polynomial, delta, W: WorldSpec | None,
                   seed: int = 42, n_starts: int = 400, radius: float | None = None,
                   check_regular: bool = True) -> MorseResult:
    """Euler characteristic of the region {g >= delta} inside W ∩ {constraints = 0}.

    With ``W=None`` the region must be compact on its own (for instance a ball
    written as g = eps^2 - rho, delta = 0); ``radius`` then bounds sampling.
    """
    polys = _ambient(constraints, W)
    N = g.num_vars
    delta = Fraction(delta)
    gd = g - delta
    r = radius if radius is not None else W.sample_radius
    sampler = "sphere" if (W is not None and W.is_sphere) else "ball"
    d = N - len(polys)
    if d < 0:
        raise ValueError("more constraints than variables")
    notes = []
    bpolys = polys + [gd]
    if check_regular and len(bpolys) <= N:
        ok, n_chk, bad = regularity_sample(list(constraints) + [gd], W, REGULAR_SAMPLES, seed + 5, r, sampler)
        if not ok:
            raise SingularVarietyError(f"boundary is singular near {tuple(round(v, 6) for v in bad)}")
        notes.append(f"boundary regularity sampled at {n_chk} points")
    inside = (Inequation(gd, "gt"),)
    if d == 0:
        def run(n, s):
            sol = _count_points(polys, r, sampler, n, s, inside)
            return sol.points, sol
        (pts, _), note = _stable(run, n_starts, seed)
        recs = [MorseRecord(p.coords, 0.0, 0, "interior") for p in pts]
        return MorseResult(len(recs), 0, recs, None, 0, "boundary", notes + ([note] if note else []))
    rng = np.random.default_rng(seed + 2027)
    for attempt in range(MAX_REDRAWS + 1):
        coeffs = rng.uniform(-1.0, 1.0, N)
        try:
            def run_in(n, s):
                if not polys:
                    return [], None
                return _morse_points(polys, coeffs, r, sampler, n, s, inside)

            def run_bd(n, s):
                return _morse_points(bpolys, coeffs, r, sampler, n, s + 7)
            (ipts, _), n1 = _stable(run_in, n_starts, seed + 31 * attempt)
            (bpts, _), n2 = _stable(run_bd, n_starts, seed + 31 * attempt)
            recs = [MorseRecord(tuple(float(v) for v in x), val, idx, "interior") for x, _, val, idx in ipts]
            outward = 0
            for x, lam, val, idx in bpts:
                mu = lam[-1]
                gscale = max(float(np.max(_Hessians([gd]).jac_scale(x))), 1e-300)
                if abs(mu) * gscale < MU_TOL * float(np.linalg.norm(coeffs)):
                    raise _Degenerate("boundary multiplier vanishes (tangency)")
                if mu > 0:
                    recs.append(MorseRecord(tuple(float(v) for v in x), val, idx, "boundary-inward"))
                else:
                    outward += 1
        except _Degenerate as exc:
            notes.append(f"redraw {attempt + 1}: {exc}")
            continue
        notes.extend(n for n in (n1, n2) if n)
        chi = sum((-1) ** rec.index for rec in recs)
        return MorseResult(chi, d, recs, tuple(float(c) for c in coeffs), attempt, "boundary",
                           notes, outward)
    raise MorseError(f"functional stayed degenerate after {MAX_REDRAWS} redraws")


def morse_chi_boundary(constraints: Sequence[Polynomial], g: Polynomial, delta, W: WorldSpec | None,
                       seed: int = 42, n_starts: int = 400, radius: float | None = None) -> int:
    return morse_boundary(constraints, g, delta, W, seed, n_starts, radius).chi


# ---------------------------------------------------------------------------
# curve oracle


@dataclass
class CurveReport:
    chi: int
    arcs: int
    loops: int
    samples: int
    multiples: tuple[float, ...]


def _endpoint_mask(P: np.ndarray, tree: cKDTree, rad: float) -> np.ndarray:
    mask = np.zeros(len(P), dtype=bool)
    for k, x in enumerate(P):
        nb = tree.query_ball_point(x, rad)
        if len(nb) < 3:
            mask[k] = True
            continue
        D = P[nb] - x
        _, _, Vt = np.linalg.svd(D - D.mean(axis=0), full_matrices=False)
        t = D @ Vt[0]
        lo, hi = t.min(), t.max()
        if min(-lo, hi) < 0.25 * max(-lo, hi):
            mask[k] = True
    return mask


def _classify_components(P: np.ndarray, rad: float) -> tuple[int, int]:
    tree = cKDTree(P)
    pairs = tree.query_pairs(rad, output_type="ndarray")
    n = len(P)
    A = csr_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n)) if len(pairs) else csr_matrix((n, n))
    ncomp, labels = connected_components(A, directed=False)
    ends = _endpoint_mask(P, tree, rad)
    arcs = loops = 0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        if len(idx) < 5:
            raise OracleError("isolated sample cluster: sampling too sparse")
        e = idx[ends[idx]]
        if len(e) == 0:
            loops += 1
            continue
        # endpoints cluster at the two ends of an arc
        sub = cKDTree(P[e])
        ep = sub.query_pairs(2 * rad, output_type="ndarray")
        m = len(e)
        B = csr_matrix((np.ones(len(ep)), (ep[:, 0], ep[:, 1])), shape=(m, m)) if len(ep) else csr_matrix((m, m))
        k, _ = connected_components(B, directed=False)
        if k != 2:
            raise OracleError(f"component with {k} endpoint clusters is neither an arc nor a loop")
        arcs += 1
    return arcs, loops


def _thin(P: np.ndarray, spacing: float, existing: np.ndarray | None = None) -> np.ndarray:
    kept: list[np.ndarray] = []
    base = cKDTree(existing) if existing is not None and len(existing) else None
    for x in P:
        if base is not None and base.query(x)[0] < spacing:
            continue
        if kept and np.min(np.linalg.norm(np.array(kept) - x, axis=1)) < spacing:
            continue
        kept.append(x)
    return np.array(kept) if kept else np.zeros((0, P.shape[1]))


def _densify(system: PolySystem, P: np.ndarray, h: float, seed: int, radius: float,
             max_rounds: int = 5000) -> np.ndarray:
    """Walk along the curve from every sample in steps of h until no new points appear."""
    c = compiled(system)
    pts = _thin(P, 0.5 * h)
    frontier = pts
    for _ in range(max_rounds):
        if len(frontier) == 0:
            break
        J = c.eq.jacobian(frontier)
        _, _, Vt = np.linalg.svd(J)
        t = Vt[:, -1, :]
        starts = np.vstack([frontier + h * t, frontier - h * t])
        sol = solve_from(system, starts, seed, radius, maxit=50)
        new = _thin(sol.array(system.ambient), 0.5 * h, pts) if len(sol) else np.zeros((0, pts.shape[1]))
        if len(new) == 0:
            break
        pts = np.vstack([pts, new])
        frontier = new
    return pts


def curve_oracle(system: PolySystem, radius: float | None = None, density: int = 2000,
                 seed: int = 42, multiples: Sequence[float] = (2.5, 3.0, 4.0),
                 sampler: str = "sphere", resolution: int = 120) -> CurveReport:
    """Brute-force chi of a compact curve: arcs count 1, loops count 0.

    Multistart samples seed a walk along the curve at spacing diameter/resolution;
    the resulting points are linked by a radius graph at several multiples of the
    median nearest-neighbour distance, and the arc/loop census must agree across
    all multiples.
    """
    r = radius or system.radius
    sol = multistart_solve(system, sampler, density, seed, r)
    P = sol.array(system.ambient)
    if len(P) < 10:
        raise OracleError(f"only {len(P)} samples: the set is not a curve (or is empty)")
    spread = float(np.max(np.linalg.norm(P - P.mean(axis=0), axis=1)))
    if spread <= 1e-9 * max(r, 1e-300) or len(sol) < 0.2 * min(density, 50):
        raise OracleError("samples collapse onto isolated points: not 1-dimensional")
    h = 2.0 * spread / resolution
    P = _densify(system, P, h, seed, r)
    tree = cKDTree(P)
    dist, _ = tree.query(P, k=2)
    if np.median(dist[:, 1]) > 4 * h:
        raise OracleError("samples are isolated: not 1-dimensional")
    hm = float(np.median(dist[:, 1]))
    results = {_classify_components(P, m * hm) for m in multiples}
    if len(results) != 1:
        raise OracleError(f"linking depends on the radius multiple: {sorted(results)}")
    arcs, loops = results.pop()
    return CurveReport(arcs, arcs, loops, len(P), tuple(multiples))


def curve_chi_oracle(system: PolySystem, radius: float | None = None, density: int = 3000,
                     seed: int = 42) -> int:
    return curve_oracle(system, radius, density, seed).chi


def curve_system(constraints: Sequence[Polynomial], W: WorldSpec, inequations: Sequence[Inequation] = ()) -> PolySystem:
    return PolySystem(tuple(W.constraints) + tuple(constraints), tuple(inequations), 0,
                      "curve", n_world=W.k, radius=W.sample_radius)


# ---------------------------------------------------------------------------
# inclusion-exclusion and carpeting


@dataclass
class PieceResult:
    chi: int
    terms: list[tuple[tuple[int, ...], int]]


def chi_inclusion_exclusion(pieces: Sequence[Sequence[Polynomial]], W: WorldSpec, seed: int = 42,
                            n_starts: int = 400) -> PieceResult:
    """chi of a union of smooth pieces, each piece given by its own equations."""
    if not pieces:
        raise ValueError("no pieces declared")
    terms = []
    total = 0
    for size in range(1, len(pieces) + 1):
        for combo in combinations(range(len(pieces)), size):
            eqs = [e for k in combo for e in pieces[k]]
            chi = _chi_maybe_empty(eqs, W, seed + 13 * len(terms), n_starts)
            terms.append((combo, chi))
            total += (-1) ** (size + 1) * chi
    return PieceResult(total, terms)


def _chi_maybe_empty(eqs, W, seed, n_starts) -> int:
    polys = _ambient(eqs, W)
    N = polys[0].num_vars
    if len(polys) > N:
        # overdetermined intersection: count points if any
        sol = _count_points(polys, W.sample_radius, "sphere", n_starts, seed)
        return len(sol)
    sol = _count_points(polys, W.sample_radius, "sphere", n_starts, seed)
    if len(sol) == 0:
        return 0
    return morse_closed(eqs, W, seed, n_starts).chi


def value_range(f: Polynomial, constraints: Sequence[Polynomial], W: WorldSpec,
                n: int = 400, seed: int = 42) -> float:
    polys = _ambient(constraints, W)
    r = W.sample_radius
    if len(polys) == 1 and W.is_sphere:
        X = sample_starts("sphere", n, W.num_vars, r, np.random.default_rng(seed))
    else:
        X = _count_points(polys, r, "sphere", n, seed).array(W.num_vars)
    if len(X) == 0:
        return 0.0
    vals = CompiledPolys([f]).values(X)[:, 0]
    return float(np.max(np.abs(vals)))


@dataclass
class DeltaChoice:
    delta: float | None
    value_range: float
    table: list[tuple[float, int]]


def choose_delta(F: PolyMap, W: WorldSpec, j: int = 1, sign: int = 1, drop_rest: bool = True,
                 seed: int = 42, n_starts: int = 400, grid: Sequence[float] = DELTA_GRID) -> DeltaChoice:
    """Largest grid delta with no critical values of s*f_j in (0, delta]."""
    eta = [f for k, f in enumerate(F, start=1) if k != j] if drop_rest else []
    vr = value_range(F[j - 1], eta, W, seed=seed)
    if vr == 0.0:
        return DeltaChoice(None, 0.0, [])
    deltas = [float(Fraction(g * vr).limit_denominator(10 ** 9)) for g in grid]
    table = []
    best = None
    for d, system in carpeting_system(F, W, j, deltas, sign, drop_rest):
        sol = multistart_solve(system, "sphere", n_starts, seed, W.sample_radius)
        table.append((d, len(sol)))
        if len(sol) == 0 and best is None:
            best = d
    return DeltaChoice(best, vr, table)


# ---------------------------------------------------------------------------
# parity engine


def predict_link_chi(chi_fiber: int, chi_W: int, n: int, l: int) -> int:
    """chi(V_W(f_I)) for #I = l from the fiber characteristic."""
    if n < 2 or l < 1:
        raise ValueError("need n >= 2 and l >= 1")
    if n % 2 == 0:
        return 2 * chi_fiber if l % 2 == 1 else 0
    return chi_W - 2 * chi_fiber if l % 2 == 1 else chi_W


def invert_fiber_chi(chi_link: int, chi_W: int, n: int, l: int = 1) -> int:
    """Solve the parity table for chi(M_F); only odd l carries fiber information."""
    if n < 2 or l < 1:
        raise ValueError("need n >= 2 and l >= 1")
    if l % 2 == 0:
        raise ParityError(f"l = {l} is even: the link characteristic does not involve the fiber")
    diff = chi_link if n % 2 == 0 else chi_W - chi_link
    if diff % 2:
        raise ParityError(f"odd difference {diff} (n={n}, chi_W={chi_W}, chi_link={chi_link}): "
                          "an upstream Euler characteristic is wrong")
    return diff // 2


def single_link_fiber(chi_link: int, chi_W: int, n: int) -> int:
    """The l = 1 relation chi(V_W(f_j)) = chi(W) - (-1)^(n-1) 2 chi(M_F), solved."""
    diff = chi_W - chi_link
    if diff % 2:
        raise ParityError(f"odd difference {diff}")
    return (-1) ** (n - 1) * diff // 2
