"""Multistart damped Gauss-Newton, emptiness scoring and radius sweeps.

All starts of a multistart run are refined together as one numpy batch, which
keeps results in start order and therefore deterministic for a given seed.
Every verdict produced here is numerical evidence, never a certificate.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .polyring import CompiledPolys, CompiledSystem, PolyMap
from .systems import (
    PolySystem,
    WorldSpec,
    sigma_F_W,
    sigma_Fbar_charts,
    zero_set_system,
)

log = logging.getLogger(__name__)

ACCEPT_TOL = 1e-10
NEWTON_TOL = 1e-12
INEQ_MARGIN = 1e-8
VERIFY_TOL = 1e-9
EMPTY_THRESHOLD = 1e-6
MERGE_REL = 1e-6
ON_V_TOL = 1e-9
COND_A_FLOOR = 1e-4
SLOPE_THRESHOLD = 0.5
RANK_TOL = 1e-5
INTERIOR_LEVELS = 6
HEURISTIC_NOTE = "heuristic, not certified"

TOLERANCES = {
    "newton_tol": NEWTON_TOL,
    "accept_tol": ACCEPT_TOL,
    "inequation_margin": INEQ_MARGIN,
    "verify_tol": VERIFY_TOL,
    "emptiness_threshold": EMPTY_THRESHOLD,
    "merge_radius_rel": MERGE_REL,
    "on_V_tol": ON_V_TOL,
    "condition_a_floor_rel": COND_A_FLOOR,
    "accumulation_slope": SLOPE_THRESHOLD,
    "rank_sigma_rel": RANK_TOL,
}


class SolverError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# compiled views of a system


class _Compiled:
    def __init__(self, system: PolySystem):
        self.system = system
        self.n = system.num_vars
        self.ambient = system.ambient
        self.eq = CompiledSystem(list(system.equations))
        self.ineq = [(CompiledPolys([q.poly]), q.kind) for q in system.inequations]
        nw = system.n_world
        self.world = CompiledSystem(list(system.equations[:nw])) if nw else None
        aux = self.ambient
        # equations free of auxiliary unknowns: used to pre-project starts
        self.aux_free = [e for e in system.equations
                         if all(not any(exp[aux:]) for exp, _ in e.items())]
        self.proj = CompiledSystem(self.aux_free) if (system.aux_unknowns and self.aux_free) else None
        rows = system.meta.get("rank_rows")
        self.rows = None
        if rows:
            self.row_shape = (len(rows), len(rows[0]))
            self.rows = CompiledPolys([e for row in rows for e in row])
        chart = system.meta.get("chart")
        self.chart = None
        if chart:
            comps, i = chart
            self.chart = (CompiledPolys(list(comps)), i - 1)

    def magnitudes(self, X: np.ndarray) -> np.ndarray:
        """Per-variable magnitudes floored by the norm of their group."""
        X = np.atleast_2d(X)
        U = np.abs(X).copy()
        a = self.ambient
        gx = np.linalg.norm(X[:, :a], axis=1, keepdims=True)
        U[:, :a] = np.maximum(U[:, :a], gx)
        if self.n > a:
            gl = np.linalg.norm(X[:, a:], axis=1, keepdims=True)
            U[:, a:] = np.maximum(U[:, a:], gl)
        return np.maximum(U, 1e-300)

    def rel_residual(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        vals = self.eq.values(X)
        scale = np.maximum(self.eq.term_scale(self.magnitudes(X)), 1e-300)
        return np.max(np.abs(vals) / scale, axis=1)

    def rank_sigma(self, X: np.ndarray) -> np.ndarray:
        """sigma_min / sigma_max of the matrix with unit-normalized rows.

        Zero rows count as rank loss.  Systems without a rank matrix give 0.
        """
        X = np.atleast_2d(X)
        if self.rows is None:
            return np.zeros(X.shape[0])
        M = self.rows.values(X).reshape((X.shape[0],) + self.row_shape)
        nrm = np.linalg.norm(M, axis=2, keepdims=True)
        zero = np.any(nrm[:, :, 0] <= 1e-300, axis=1)
        M = M / np.maximum(nrm, 1e-300)
        sv = np.linalg.svd(M, compute_uv=False)
        out = sv[:, -1] / np.maximum(sv[:, 0], 1e-300)
        return np.where(zero, 0.0, out)

    def chart_ok(self, X: np.ndarray) -> np.ndarray:
        """Chart i only claims points with |f_i| >= |F| / (2 sqrt p); the
        remaining points belong to another chart, so nothing is lost."""
        X = np.atleast_2d(X)
        if self.chart is None:
            return np.ones(X.shape[0], dtype=bool)
        comp, i = self.chart
        V = comp.values(X)
        p = V.shape[1]
        return np.abs(V[:, i]) >= np.linalg.norm(V, axis=1) / (2 * np.sqrt(p))

    def domain_ok(self, X: np.ndarray) -> np.ndarray:
        return self.ineq_ok(X) & self.chart_ok(X) & (self.rank_sigma(X) <= RANK_TOL)

    def ineq_ok(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        ok = np.ones(X.shape[0], dtype=bool)
        U = self.magnitudes(X)
        for comp, kind in self.ineq:
            v = comp.values(X)[:, 0]
            m = INEQ_MARGIN * comp.term_scale(U)[:, 0]
            if kind == "ne":
                ok &= np.abs(v) > m
            elif kind == "gt":
                ok &= v > m
            elif kind == "lt":
                ok &= v < -m
            else:
                ok &= v > -m
        return ok


@lru_cache(maxsize=256)
def _compiled(system: PolySystem) -> _Compiled:
    return _Compiled(system)


def compiled(system: PolySystem) -> _Compiled:
    try:
        return _compiled(system)
    except TypeError:  # unhashable meta
        return _Compiled(system)


# ---------------------------------------------------------------------------
# batched damped Gauss-Newton


def _gauss_newton(cs: CompiledSystem, mags: Callable, X0: np.ndarray, tol: float,
                  maxit: int, limit: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Refine all rows of X0 together.  Returns (X, weighted residual, status).

    status: 0 converged, 1 max iterations, 2 diverged, 3 stalled.
    """
    X = np.array(X0, dtype=float, copy=True)
    S = X.shape[0]
    status = np.full(S, 1, dtype=int)
    active = np.ones(S, dtype=bool)
    res = np.full(S, np.inf)
    for _ in range(maxit):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[idx]
        w = 1.0 / np.maximum(cs.term_scale(mags(Xa)), 1e-300)
        Fa = cs.values(Xa) * w
        nrm = np.max(np.abs(Fa), axis=1)
        res[idx] = nrm
        done = nrm <= tol
        status[idx[done]] = 0
        active[idx[done]] = False
        keep = ~done
        idx, Xa, Fa, w = idx[keep], Xa[keep], Fa[keep], w[keep]
        if idx.size == 0:
            break
        J = cs.jacobian(Xa) * w[:, :, None]
        step = -np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=1e-13), Fa)
        f0 = np.sum(Fa ** 2, axis=1)
        accepted = np.zeros(idx.size, dtype=bool)
        newX = Xa.copy()
        t = 1.0
        for _ls in range(12):
            pend = np.flatnonzero(~accepted)
            if pend.size == 0:
                break
            trial = Xa[pend] + t * step[pend]
            ft = np.sum((cs.values(trial) * w[pend]) ** 2, axis=1)
            good = np.isfinite(ft) & (ft < f0[pend] * (1 - 1e-4 * t))
            newX[pend[good]] = trial[good]
            accepted[pend[good]] = True
            t *= 0.5
        stalled = ~accepted
        # a stalled point with tiny step is at a (local) least-squares minimum
        status[idx[stalled]] = 3
        active[idx[stalled]] = False
        X[idx] = newX
        big = np.linalg.norm(X[idx], axis=1) > limit
        status[idx[big]] = 2
        active[idx[big]] = False
    idx = np.flatnonzero(status != 0)
    if idx.size:
        w = 1.0 / np.maximum(cs.term_scale(mags(X[idx])), 1e-300)
        res[idx] = np.max(np.abs(cs.values(X[idx]) * w), axis=1)
    return X, res, status


@dataclass
class RefineResult:
    point: np.ndarray | None
    residual: float
    status: str


def _init_aux(c: _Compiled, X: np.ndarray) -> np.ndarray:
    """Least-squares multipliers for fixed coordinates."""
    a = c.ambient
    if c.n == a:
        return X
    X = X.copy()
    X[:, a:] = 0.0
    F0 = c.eq.values(X)
    J = c.eq.jacobian(X)[:, :, a:]
    lam = -np.einsum("sij,sj->si", np.linalg.pinv(J, rcond=1e-12), F0)
    X[:, a:] = lam
    return X


def _prepare_starts(c: _Compiled, X: np.ndarray, limit: float) -> np.ndarray:
    a = c.ambient
    if c.proj is not None:
        sub = CompiledSystem([p for p in c.aux_free])
        coords = X.copy()

        def mags(Y):
            return c.magnitudes(Y)

        Y, _, _ = _gauss_newton(sub, mags, coords, NEWTON_TOL, 50, limit)
        ok = np.all(np.isfinite(Y), axis=1)
        X = np.where(ok[:, None], Y, X)
        X[:, a:] = 0.0
    return _init_aux(c, X)


def _classify(c: _Compiled, X, res, status):
    """Acceptance mask plus reason strings."""
    finite = np.all(np.isfinite(X), axis=1)
    rel = np.full(X.shape[0], np.inf)
    rel[finite] = c.rel_residual(X[finite])
    ok_res = finite & (rel <= ACCEPT_TOL)
    ok_ineq = np.zeros_like(ok_res)
    ok_ineq[finite] = c.domain_ok(X[finite])
    return ok_res & ok_ineq, ok_res, rel


def newton_refine(system: PolySystem, start: Sequence[float], tol: float = NEWTON_TOL,
                  maxit: int = 200) -> RefineResult:
    """Damped Gauss-Newton from one start.

    Accepts when the relative residual is <= 1e-10, every inequation holds
    with margin 1e-8 and, for rank systems, the normalized matrix really
    drops rank; otherwise reports why not.
    """
    c = compiled(system)
    x0 = np.asarray(start, dtype=float).reshape(1, -1)
    if x0.shape[1] != c.n:
        raise ValueError(f"start has length {x0.shape[1]}, system has {c.n} unknowns")
    limit = 1e6 * max(1.0, float(np.linalg.norm(x0)), system.radius or 1.0)
    X, _, status = _gauss_newton(c.eq, c.magnitudes, x0, tol, maxit, limit)
    acc, ok_res, rel = _classify(c, X, None, status)
    if acc[0]:
        return RefineResult(X[0], float(rel[0]), "converged")
    if ok_res[0]:
        if not (c.ineq_ok(X) & c.chart_ok(X))[0]:
            return RefineResult(None, float(rel[0]), "inequation violated")
        return RefineResult(None, float(rel[0]), "rank check failed")
    reason = {1: "max iterations", 2: "diverged", 3: "stalled"}.get(int(status[0]), "not converged")
    return RefineResult(None, float(rel[0]), reason)


# ---------------------------------------------------------------------------
# multistart


@dataclass
class SolutionPoint:
    coords: tuple[float, ...]
    residual: float
    basin_count: int


@dataclass
class SolutionSet:
    points: list[SolutionPoint]
    tag: str
    seed: int
    n_starts: int
    n_accepted: int = 0
    radius: float | None = None
    rejected: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def coverage(self) -> float:
        return self.n_accepted / self.n_starts if self.n_starts else 0.0

    def array(self, ambient_only: int | None = None) -> np.ndarray:
        if not self.points:
            return np.zeros((0, ambient_only or 0))
        A = np.array([p.coords for p in self.points])
        return A[:, :ambient_only] if ambient_only is not None else A


def sample_starts(kind: str, n: int, dim: int, radius: float, rng: np.random.Generator,
                  center: np.ndarray | None = None) -> np.ndarray:
    if kind == "sphere":
        G = rng.standard_normal((n, dim))
        X = radius * G / np.linalg.norm(G, axis=1, keepdims=True)
    elif kind == "ball":
        G = rng.standard_normal((n, dim))
        G /= np.linalg.norm(G, axis=1, keepdims=True)
        X = radius * G * rng.random((n, 1)) ** (1.0 / dim)
    elif kind == "box":
        X = rng.uniform(-radius, radius, (n, dim))
    else:
        raise ValueError(f"unknown sampler {kind!r}")
    if center is not None:
        X = X + center
    return X


def _dedup(points: np.ndarray, res: np.ndarray, merge: float) -> list[SolutionPoint]:
    """Greedy merge in input order.  The first point of a cluster fixes its
    center; the representative is the member with the smallest residual."""
    if len(points) == 0:
        return []
    centers = np.empty_like(points)
    best = []
    k = 0
    for x, r in zip(points, res):
        if k:
            d = np.sqrt(np.sum((centers[:k] - x) ** 2, axis=1))
            hit = np.flatnonzero(d <= merge)
            if hit.size:
                rep = best[hit[0]]
                rep[2] += 1
                if r < rep[1]:
                    rep[0], rep[1] = x, r
                continue
        centers[k] = x
        best.append([x, r, 1])
        k += 1
    return [SolutionPoint(tuple(float(v) for v in x), float(r), int(b)) for x, r, b in best]


def _verify(system: PolySystem, x: np.ndarray, c: _Compiled) -> float:
    """Independent check: term-by-term float evaluation of every equation."""
    pt = [float(v) for v in x]
    U = c.magnitudes(np.array([pt]))[0]
    worst = 0.0
    for e in system.equations:
        val = e.evaluate(pt)
        scale = sum(abs(float(cf)) * float(np.prod(U ** np.array(exp))) for exp, cf in e.items())
        worst = max(worst, abs(val) / max(scale, 1e-300))
    return worst


def solve_from(system: PolySystem, starts: np.ndarray, seed: int = 0,
               region_radius: float | None = None, maxit: int = 200) -> SolutionSet:
    c = compiled(system)
    starts = np.atleast_2d(np.asarray(starts, dtype=float))
    if starts.shape[1] == c.ambient and c.n > c.ambient:
        starts = np.hstack([starts, np.zeros((starts.shape[0], c.n - c.ambient))])
    r = region_radius or system.radius or float(np.max(np.linalg.norm(starts[:, :c.ambient], axis=1), initial=1.0))
    limit = 1e6 * max(r, 1.0)
    X0 = _prepare_starts(c, starts, limit)
    X, res, status = _gauss_newton(c.eq, c.magnitudes, X0, NEWTON_TOL, maxit, limit)
    acc, ok_res, rel = _classify(c, X, res, status)
    rejected = {
        "inequation or rank check": int(np.sum(ok_res & ~acc)),
        "not converged": int(np.sum(~ok_res)),
    }
    idx = np.flatnonzero(acc)
    pts = _dedup(X[idx], rel[idx], MERGE_REL * 2 * r)
    verified = []
    for p in pts:
        v = _verify(system, np.array(p.coords), c)
        if v <= VERIFY_TOL:
            verified.append(p)
        else:
            rejected["failed verification"] = rejected.get("failed verification", 0) + 1
    return SolutionSet(verified, system.tag, seed, starts.shape[0], int(idx.size),
                       system.radius, rejected)


def multistart_solve(system: PolySystem, sampler: str = "sphere", n_starts: int = 500,
                     seed: int = 42, radius: float | None = None, maxit: int = 200) -> SolutionSet:
    """Refine ``n_starts`` random starts and keep the distinct accepted limits."""
    if n_starts < 1:
        raise ValueError("n_starts must be >= 1")
    c = compiled(system)
    r = radius or system.radius
    if r is None:
        raise ValueError("a sampling radius is required")
    rng = np.random.default_rng(seed)
    starts = sample_starts(sampler, n_starts, c.ambient, float(r), rng)
    return solve_from(system, starts, seed, float(r), maxit)


# ---------------------------------------------------------------------------
# emptiness scoring


@dataclass
class EmptinessResult:
    score: float
    verdict: str  # "empty" or "witness"
    witness: tuple[float, ...] | None
    n_samples: int
    threshold: float = EMPTY_THRESHOLD


class _Scorer:
    """Dimensionless objective: world equations plus normalized remaining equations.

    Each world equation is divided by its term bound on the ball of the region
    radius.  For rank systems the minors are divided by the product of the row
    norms, so their sum of squares is the Gram determinant of the normalized
    rows: 0 exactly on rank loss, 1 for orthogonal rows, and blind to common
    factors of the rows.  Other systems with a normalizer g divide by
    (g/S_g)^m instead.
    """

    def __init__(self, system: PolySystem, radius: float):
        nw = system.n_world
        self.nw = nw
        world = list(system.equations[:nw])
        rest = list(system.equations[nw:])
        self.world = CompiledSystem(world) if world else None
        self.rest = CompiledSystem(rest)
        self.s_world = np.array([max(h.abs_scale(radius), 1e-300) for h in world])
        self.s_rest = np.array([max(e.abs_scale(radius), 1e-300) for e in rest])
        self.norm = None
        if system.normalizer is not None and system.normalizer_power:
            self.norm = CompiledSystem([system.normalizer])
            self.s_norm = max(system.normalizer.abs_scale(radius), 1e-300)
            self.m = system.normalizer_power
            if system.meta.get("rank_rows"):
                self.s_rest = np.ones(len(rest))
                self.s_norm = 1.0

    def residual_and_jac(self, X):
        vals = self.rest.values(X) / self.s_rest
        J = self.rest.jacobian(X) / self.s_rest[None, :, None]
        if self.norm is not None:
            g = self.norm.values(X)[:, 0] / self.s_norm
            g = np.where(np.abs(g) < 1e-300, 1e-300, g)
            dg = self.norm.jacobian(X)[:, 0, :] / self.s_norm
            gm = g ** self.m
            J = J / gm[:, None, None] - (self.m * vals / (gm * g)[:, None])[:, :, None] * dg[:, None, :]
            vals = vals / gm[:, None]
        return vals, J

    def objective(self, X):
        v, _ = self.residual_and_jac(X)
        return np.sum(v ** 2, axis=1)


def _project_world(scorer: _Scorer, system: PolySystem, X: np.ndarray, radius: float) -> np.ndarray:
    if scorer.world is None:
        return X
    eqs = list(system.equations[:system.n_world])
    from .systems import sphere_constraint  # local: avoid widening the import surface
    if len(eqs) == 1 and system.radius is not None and eqs[0] == sphere_constraint(X.shape[1], _frac(system.radius)):
        return system.radius * X / np.maximum(np.linalg.norm(X, axis=1, keepdims=True), 1e-300)
    Y, _, _ = _gauss_newton(scorer.world, lambda Z: np.maximum(np.abs(Z), np.linalg.norm(Z, axis=1, keepdims=True)),
                            X, NEWTON_TOL, 30, 1e6 * max(radius, 1.0))
    return Y


def _frac(r):
    from fractions import Fraction
    return Fraction(r).limit_denominator(10 ** 12)


def emptiness_score(system: PolySystem, radius: float | None = None, n_samples: int = 500,
                    seed: int = 42, sampler: str = "sphere", maxit: int = 80) -> EmptinessResult:
    """Minimize the normalized squared residual over W from many starts.

    Verdict "empty" when the minimum exceeds 1e-6; otherwise the minimizer is
    returned as a witness.
    """
    r = float(radius or system.radius or 0.0)
    if r <= 0:
        raise ValueError("emptiness scoring needs a bounded region")
    scorer = _Scorer(system, r)
    rng = np.random.default_rng(seed)
    X = sample_starts(sampler, n_samples, system.ambient, r, rng)
    X = _project_world(scorer, system, X, r)
    mu = np.full(X.shape[0], 1e-3)
    phi = scorer.objective(X)
    for _ in range(maxit):
        v, J = scorer.residual_and_jac(X)
        if scorer.world is not None:
            hv = scorer.world.values(X) / scorer.s_world
            hJ = scorer.world.jacobian(X) / scorer.s_world[None, :, None]
            v = np.concatenate([hv, v], axis=1)
            J = np.concatenate([hJ, J], axis=1)
        JtJ = np.einsum("sij,sik->sjk", J, J)
        g = np.einsum("sij,si->sj", J, v)
        diag = np.einsum("sii->si", JtJ) + 1e-300
        A = JtJ + mu[:, None, None] * np.apply_along_axis(np.diag, 1, diag)
        try:
            step = -np.linalg.solve(A, g[..., None])[..., 0]
        except np.linalg.LinAlgError:
            step = -np.einsum("sij,sj->si", np.linalg.pinv(A), g)
        trial = _project_world(scorer, system, X + step, r)
        with np.errstate(all="ignore"):
            phi_t = scorer.objective(trial)
        better = np.isfinite(phi_t) & (phi_t < phi)
        X = np.where(better[:, None], trial, X)
        phi = np.where(better, phi_t, phi)
        mu = np.where(better, mu / 3, mu * 4)
        mu = np.clip(mu, 1e-12, 1e12)
    # points that drifted onto the chart wall are not witnesses
    c = compiled(system)
    ok = np.isfinite(phi) & c.ineq_ok(X) & c.chart_ok(X)
    if not np.any(ok):
        return EmptinessResult(float("inf"), "empty", None, n_samples)
    k = int(np.argmin(np.where(ok, phi, np.inf)))
    score = float(phi[k])
    if score > EMPTY_THRESHOLD:
        return EmptinessResult(score, "empty", None, n_samples)
    return EmptinessResult(score, "witness", tuple(float(v) for v in X[k]), n_samples)


# ---------------------------------------------------------------------------
# sweeps and verdicts


@dataclass
class RadiusProbe:
    radius: float
    count: int
    min_norm: float | None
    min_dist_to_V: float | None
    score: float
    empty: bool
    witnesses: list[tuple[float, ...]]


@dataclass
class SweepVerdict:
    radii: list[float]
    probes: list[RadiusProbe]
    verdict: str  # empty | bounded | unbounded-suspect | accumulates-at-center
    mode: str
    notes: list[str] = field(default_factory=list)
    slope: float | None = None
    interior_nonempty: bool | None = None
    heuristic: str = HEURISTIC_NOTE
    solution_sets: list[SolutionSet] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "mode": self.mode,
            "radii": self.radii,
            "counts": [p.count for p in self.probes],
            "min_norms": [p.min_norm for p in self.probes],
            "min_dist_to_V": [p.min_dist_to_V for p in self.probes],
            "emptiness_scores": [p.score for p in self.probes],
            "slope": self.slope,
            "interior_nonempty": self.interior_nonempty,
            "notes": list(self.notes),
            "heuristic": self.heuristic,
        }


def _check_radii(radii: Sequence[float], mode: str) -> list[float]:
    radii = [float(r) for r in radii]
    if len(radii) < 3:
        raise ValueError("a sweep needs at least 3 radii")
    if any(r <= 0 for r in radii):
        raise ValueError("radii must be positive")
    diffs = np.diff(radii)
    if mode == "local" and not np.all(diffs < 0):
        raise ValueError("local sweeps must decrease toward 0")
    if mode == "global" and not np.all(diffs > 0):
        raise ValueError("global sweeps must increase")
    if mode not in ("local", "global"):
        raise ValueError(f"unknown mode {mode!r}")
    return radii


def probe_systems(systems: Sequence[PolySystem], radius: float, n_starts: int, seed: int,
                  n_score: int | None = None, V_points: np.ndarray | None = None) -> tuple[RadiusProbe, list[SolutionSet]]:
    sets = []
    pts = []
    best_score = float("inf")
    witnesses = []
    for s_i, system in enumerate(systems):
        sol = multistart_solve(system, "sphere", n_starts, seed + 7919 * s_i, radius)
        sets.append(sol)
        pts.extend(p.coords[:system.ambient] for p in sol.points)
        em = emptiness_score(system, radius, n_score or n_starts, seed + 104729 + s_i)
        best_score = min(best_score, em.score)
        if em.witness is not None:
            ref = newton_refine(system, em.witness)
            if ref.point is not None:
                pts.append(tuple(float(v) for v in ref.point[:system.ambient]))
            witnesses.append(em.witness)
    P = _merge_points(np.array(pts) if pts else np.zeros((0, 0)), MERGE_REL * 2 * radius)
    count = len(P)
    min_norm = float(np.min(np.linalg.norm(P, axis=1))) if count else None
    dist = None
    if count and V_points is not None and len(V_points):
        dist = float(np.min(np.linalg.norm(P[:, None, :] - V_points[None, :, :], axis=2)))
    empty = count == 0 and best_score > EMPTY_THRESHOLD
    wit = [tuple(p) for p in P[:8]] if count else witnesses[:8]
    return RadiusProbe(radius, count, min_norm, dist, best_score, empty, wit), sets


def _merge_points(P: np.ndarray, merge: float) -> np.ndarray:
    out: list[np.ndarray] = []
    for x in P:
        if not any(np.linalg.norm(x - y) <= merge for y in out):
            out.append(x)
    return np.array(out) if out else np.zeros((0, P.shape[1] if P.ndim == 2 else 0))


def radius_sweep(family: Callable[[float], Sequence[PolySystem]], radii: Sequence[float],
                 mode: str, n_starts: int = 300, seed: int = 42,
                 interior: Callable[[float], Sequence[PolySystem]] | None = None,
                 n_score: int | None = None,
                 V_family: Callable[[float], np.ndarray] | None = None) -> SweepVerdict:
    """Probe a system family across radii and classify the trend.

    local:  accumulates-at-center when the three smallest radii are all
            nonempty and log(min |x|) vs log(eps) has slope >= 0.5.
    global: bounded when the three largest radii (at least) are empty.
    "empty" additionally requires every radius empty, and in global mode that
    the interior probe (the same family on spheres of radius r0/2, ..., r0/64
    inside the smallest radius r0) finds nothing; otherwise a set that
    vanishes at large radii is "bounded".
    """
    radii = _check_radii(radii, mode)
    probes = []
    all_sets = []
    for k, r in enumerate(radii):
        V = V_family(r) if V_family is not None else None
        pr, sets = probe_systems(family(r), r, n_starts, seed + 1000 * k, n_score, V)
        probes.append(pr)
        all_sets.extend(sets)
    empties = [p.empty for p in probes]
    notes = [f"policy: 'bounded' needs >= 3 trailing empty radii; {HEURISTIC_NOTE}"]
    slope = None
    interior_nonempty = None
    ordered = probes  # local: decreasing radii, so the tail is nearest the center
    tail_empty = 0
    for p in reversed(ordered):
        if not p.empty:
            break
        tail_empty += 1
    if mode == "local":
        nonempty = [p for p in probes if not p.empty and p.min_norm is not None]
        if len(nonempty) >= 3:
            xs = np.log([p.radius for p in nonempty])
            ys = np.log([p.min_norm for p in nonempty])
            slope = float(np.polyfit(xs, ys, 1)[0])
        if all(empties):
            verdict = "empty"
        elif all(not e for e in empties[-3:]) and slope is not None and slope >= SLOPE_THRESHOLD:
            verdict = "accumulates-at-center"
        elif tail_empty >= 3:
            verdict = "bounded"
            notes.append("solutions vanish at the smallest radii")
        else:
            verdict = "unbounded-suspect"
            notes.append("inconclusive trend toward the center")
    else:
        if tail_empty >= 3:
            verdict = "bounded"
            if all(empties):
                if interior is not None:
                    r0 = radii[0]
                    found = 0
                    for k in range(1, INTERIOR_LEVELS + 1):
                        rk = r0 / 2 ** k
                        for s_i, system in enumerate(interior(rk)):
                            sol = multistart_solve(system, "sphere", n_starts, seed + 31 * s_i + 5 + 1000 * k, rk)
                            found += len(sol)
                            all_sets.append(sol)
                    interior_nonempty = found > 0
                    if interior_nonempty:
                        notes.append(f"set is nonempty inside radius {r0:g} but absent at all probed radii")
                    else:
                        verdict = "empty"
                else:
                    verdict = "empty"
        else:
            verdict = "unbounded-suspect"
            notes.append("solutions persist at the largest probed radii")
    return SweepVerdict(radii, probes, verdict, mode, notes, slope, interior_nonempty,
                        solution_sets=all_sets)


@dataclass
class ConditionA:
    holds: bool
    radii: list[float]
    min_distances: list[float | None]
    floors: list[float]
    sigma_counts: list[int]
    V_counts: list[int]
    solution_sets: list[SolutionSet] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "holds": self.holds,
            "radii": self.radii,
            "min_distance_sigma_to_V": self.min_distances,
            "floors": self.floors,
            "sigma_sample_counts": self.sigma_counts,
            "V_sample_counts": self.V_counts,
            "heuristic": HEURISTIC_NOTE,
        }


def _on_V(F: PolyMap, X: np.ndarray) -> np.ndarray:
    cp = CompiledPolys(list(F))
    vals = cp.values(X)
    U = np.maximum(np.abs(X), np.linalg.norm(X, axis=1, keepdims=True))
    scale = np.maximum(cp.term_scale(U), 1e-300)
    return np.max(np.abs(vals) / scale, axis=1) <= ON_V_TOL


def V_samples(F: PolyMap, W: WorldSpec, n_starts: int, seed: int) -> SolutionSet:
    return multistart_solve(zero_set_system(F, W), "sphere" if W.is_sphere else "box",
                            n_starts, seed, W.sample_radius)


def condition_a(F: PolyMap, W: WorldSpec, radii: Sequence[float], n_starts: int = 300,
                seed: int = 42) -> ConditionA:
    """No critical points of F|W off V_W(F) accumulate on V_W(F).

    Per radius: sample Sigma_F^W globally and from multi-scale perturbations of
    each sampled point of V_W(F); the minimum distance from off-binding samples
    to the binding must exceed 1e-4 * r.
    """
    dists, floors, sc, vc, sets = [], [], [], [], []
    rng = np.random.default_rng(seed + 17)
    for k, r in enumerate(radii):
        Wr = W.at_radius(r) if W.is_sphere else W
        rr = Wr.sample_radius
        V = V_samples(F, Wr, n_starts, seed + 2000 * k)
        Vp = V.array(F.num_vars)
        sys_sigma = sigma_F_W(F, Wr)
        sol = multistart_solve(sys_sigma, "sphere" if Wr.is_sphere else "box", n_starts,
                               seed + 2000 * k + 1, rr)
        sets.extend([V, sol])
        P = sol.array(F.num_vars)
        if len(Vp):
            probes = []
            for q in Vp[:20]:
                for eps in (1e-2, 1e-4, 1e-6):
                    probes.append(q + eps * rr * rng.standard_normal((4, F.num_vars)))
            local = solve_from(sys_sigma, np.vstack(probes), seed, rr)
            if len(local):
                P = np.vstack([P, local.array(F.num_vars)]) if len(P) else local.array(F.num_vars)
        off = P[~_on_V(F, P)] if len(P) else P
        floor = COND_A_FLOOR * rr
        if len(Vp) and len(off):
            d = float(np.min(np.linalg.norm(off[:, None, :] - Vp[None, :, :], axis=2)))
        else:
            d = None
        dists.append(d)
        floors.append(floor)
        sc.append(int(len(off)))
        vc.append(int(len(Vp)))
    holds = all(d is None or d > f for d, f in zip(dists, floors))
    return ConditionA(holds, [float(r) for r in radii], dists, floors, sc, vc, sets)


@dataclass
class ConditionVerdicts:
    condition_a: ConditionA
    condition_b: SweepVerdict
    b_holds: bool
    fibration: str
    label: str = "numerical evidence"
    heuristic: str = HEURISTIC_NOTE

    @property
    def a_holds(self) -> bool:
        return self.condition_a.holds

    def to_dict(self) -> dict:
        return {
            "condition_a": self.condition_a.to_dict(),
            "condition_b": {"holds": self.b_holds, "sweep": self.condition_b.to_dict()},
            "fibration": self.fibration,
            "label": self.label,
            "heuristic": self.heuristic,
        }


def condition_verdicts(F: PolyMap, W: WorldSpec, radii: Sequence[float] | None = None,
                       n_starts: int = 300, seed: int = 42,
                       n_score: int | None = None) -> ConditionVerdicts:
    """Conditions (a), (b) across a sweep and the resulting fibration verdict."""
    mode = W.mode
    radii = [float(r) for r in (radii if radii is not None else W.radii())]
    cond_a = condition_a(F, W, radii, n_starts, seed)

    def family(r):
        return sigma_Fbar_charts(F, W.at_radius(r) if W.is_sphere else W)

    def V_family(r):
        Wr = W.at_radius(r) if W.is_sphere else W
        return V_samples(F, Wr, n_starts, seed + 3).array(F.num_vars)

    interior = family if (mode == "global" and W.is_sphere) else None
    sweep = radius_sweep(family, radii, mode, n_starts, seed + 99, interior, n_score, V_family)
    b_holds = sweep.verdict in ("empty", "bounded")
    if cond_a.holds and b_holds:
        fib = "YES"
    elif cond_a.holds and not b_holds:
        fib = "NO"
    else:
        fib = "INCONCLUSIVE"
    return ConditionVerdicts(cond_a, sweep, b_holds, fib)
