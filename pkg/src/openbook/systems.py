"""Polynomial systems for critical loci, Milnor sets and Lagrange problems.

Rank conditions are encoded by the vanishing of all maximal minors of the
relevant stacked gradient matrix.  Nothing here solves anything; see
:mod:`openbook.numsolve`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from itertools import combinations
from math import comb
from typing import Sequence

from .algebra import omega
from .polyring import Polynomial, PolyMap, PolynomialError, default_names, determinant

MAX_RANK_ROWS = 5
MAX_AMBIENT = 8

INEQ_KINDS = ("ne", "gt", "lt", "ge")


class SystemSizeError(ValueError):
    """The all-minors encoding would be too large to handle."""


@dataclass(frozen=True)
class WorldSpec:
    """W as a regular level set {h_1 = ... = h_k = 0} in R^N.

    Spheres carry their radius and the sweep schedule used for local (radii
    decreasing toward 0) or global (radii increasing) analyses.
    """

    constraints: tuple[Polynomial, ...]
    num_vars: int
    radius: Fraction | None = None
    mode: str = "global"
    sweep: tuple[Fraction, ...] = ()
    bound: float | None = None

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("W needs at least one constraint")
        if any(h.num_vars != self.num_vars for h in self.constraints):
            raise ValueError("constraints must live in R^N")
        if self.mode not in ("local", "global"):
            raise ValueError(f"mode must be 'local' or 'global', got {self.mode!r}")
        if self.radius is not None and self.radius <= 0:
            raise ValueError("radius must be positive")

    @classmethod
    def sphere(cls, num_vars: int, radius, mode: str = "global",
               sweep: Sequence = ()) -> "WorldSpec":
        r = Fraction(radius)
        return cls((sphere_constraint(num_vars, r),), num_vars, r, mode,
                   tuple(Fraction(s) for s in sweep))

    @property
    def is_sphere(self) -> bool:
        return self.radius is not None

    @property
    def k(self) -> int:
        return len(self.constraints)

    @property
    def dim(self) -> int:
        return self.num_vars - self.k

    @property
    def n(self) -> int:
        """dim W = n - 1."""
        return self.dim + 1

    @property
    def sample_radius(self) -> float:
        if self.radius is not None:
            return float(self.radius)
        if self.bound is None:
            raise ValueError("level-set worlds need a sampling bound")
        return float(self.bound)

    def at_radius(self, radius) -> "WorldSpec":
        if not self.is_sphere:
            raise ValueError("only sphere worlds can be re-radiused")
        r = Fraction(radius)
        if r <= 0:
            raise ValueError("non-positive radius")
        return replace(self, constraints=(sphere_constraint(self.num_vars, r),), radius=r)

    def radii(self) -> tuple[Fraction, ...]:
        if self.sweep:
            return self.sweep
        return (self.radius,) if self.radius is not None else ()


def rho(num_vars: int) -> Polynomial:
    """Squared distance to the origin."""
    out = Polynomial.zero(num_vars)
    for i in range(num_vars):
        x = Polynomial.variable(num_vars, i)
        out = out + x * x
    return out


def sphere_constraint(num_vars: int, radius) -> Polynomial:
    r = Fraction(radius)
    return rho(num_vars) - r * r


@dataclass(frozen=True)
class Inequation:
    poly: Polynomial
    kind: str  # "ne": != 0, "gt": > 0, "lt": < 0, "ge": >= 0 (delta folded in)

    def __post_init__(self):
        if self.kind not in INEQ_KINDS:
            raise ValueError(f"unknown inequation kind {self.kind!r}")


@dataclass(frozen=True)
class PolySystem:
    """Equations = 0 with side inequations and appended Lagrange unknowns.

    ``n_world`` counts the leading equations that describe W itself.  When set,
    ``normalizer`` ** ``normalizer_power`` divides the remaining equations in
    emptiness scoring; rank systems use the product of squared row norms with
    power 1/2.  ``meta["rank_rows"]`` keeps the matrix whose rank is encoded.
    """

    equations: tuple[Polynomial, ...]
    inequations: tuple[Inequation, ...] = ()
    aux_unknowns: int = 0
    tag: str = ""
    n_world: int = 0
    radius: float | None = None
    normalizer: Polynomial | None = None
    normalizer_power: float = 0
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.equations:
            raise ValueError("a system needs at least one equation")
        n = self.equations[0].num_vars
        polys = list(self.equations) + [q.poly for q in self.inequations]
        if self.normalizer is not None:
            polys.append(self.normalizer)
        if any(p.num_vars != n for p in polys):
            raise ValueError("all polynomials of a system share the variable count")
        if self.aux_unknowns > n:
            raise ValueError("more auxiliary unknowns than variables")

    @property
    def num_vars(self) -> int:
        return self.equations[0].num_vars

    @property
    def ambient(self) -> int:
        return self.num_vars - self.aux_unknowns

    def with_radius(self, radius: float) -> "PolySystem":
        return replace(self, radius=float(radius))

    def to_dict(self, names: Sequence[str] | None = None) -> dict:
        names = list(names) if names is not None else default_names(self.ambient)
        names = names + [f"lambda{i + 1}" for i in range(self.aux_unknowns)]
        return {
            "tag": self.tag,
            "equations": [e.to_string(names) for e in self.equations],
            "inequations": [[q.poly.to_string(names), q.kind] for q in self.inequations],
            "aux_unknowns": self.aux_unknowns,
        }


# ---------------------------------------------------------------------------


def drop_component(F: PolyMap, i: int | None = None) -> PolyMap:
    """G = pi_i o F: omit component i (1-based; default the last)."""
    if F.p < 2:
        raise PolynomialError("cannot drop a component from a map with p = 1")
    i = F.p if i is None else i
    if not 1 <= i <= F.p:
        raise PolynomialError(f"component index {i} out of range 1..{F.p}")
    return PolyMap(c for k, c in enumerate(F, start=1) if k != i)


def maximal_minors(rows: Sequence[Sequence[Polynomial]]) -> list[Polynomial]:
    """All r x r minors of an r x N polynomial matrix, zero minors dropped."""
    r = len(rows)
    N = len(rows[0])
    out = []
    for cols in combinations(range(N), r):
        m = determinant([[row[c] for c in cols] for row in rows])
        if not m.is_zero():
            out.append(m)
    return out


def _guard(rows: int, N: int) -> None:
    if rows > MAX_RANK_ROWS or N > MAX_AMBIENT:
        raise SystemSizeError(
            f"rank system with {rows} rows in R^{N} needs {comb(N, rows)} minors of size {rows}; "
            f"refusing (limits: rows <= {MAX_RANK_ROWS}, N <= {MAX_AMBIENT})")


def row_norm_product(rows) -> Polynomial:
    """prod_k |row_k|^2.  Sum of squared maximal minors over this is the Gram
    determinant of the unit-normalized rows (Cauchy-Binet), a scale-free
    measure of rank deficiency."""
    N = len(rows[0])
    out = Polynomial.constant(N, 1)
    for row in rows:
        sq = Polynomial.zero(N)
        for e in row:
            sq = sq + e * e
        out = out * sq
    return out


def _rank_system(W: WorldSpec | None, rows, tag, inequations=(), chart=None):
    minors = maximal_minors(rows)
    world = tuple(W.constraints) if W is not None else ()
    radius = None
    if W is not None and (W.radius is not None or W.bound):
        radius = W.sample_radius
    meta = {"minors": len(minors), "rank_rows": tuple(tuple(r) for r in rows)}
    if chart is not None:
        meta["chart"] = chart
    return PolySystem(world + tuple(minors), tuple(inequations), 0, tag, n_world=len(world),
                      radius=radius, normalizer=row_norm_product(rows), normalizer_power=0.5,
                      meta=meta)


def sigma_F_W(F: PolyMap, W: WorldSpec) -> PolySystem:
    """Critical points of F restricted to W: rank [grad h; grad f] < k + p."""
    if F.num_vars != W.num_vars:
        raise ValueError("F and W live in different spaces")
    rows_n = W.k + F.p
    if rows_n > W.num_vars:
        raise SystemSizeError(f"k + p = {rows_n} exceeds N = {W.num_vars}: rank condition is vacuous")
    _guard(rows_n, W.num_vars)
    rows = [h.gradient() for h in W.constraints] + [f.gradient() for f in F]
    return _rank_system(W, rows, "sigma_F")


def sigma_Fbar_W(F: PolyMap, W: WorldSpec, chart: int) -> PolySystem:
    """Critical points of F/||F|| on W within the chart {f_i != 0}.

    Uses rank [grad h; omega_{i,j} (j != i)] < k + p - 1.
    """
    if F.p < 2:
        raise PolynomialError("the normalized map needs p >= 2")
    if not 1 <= chart <= F.p:
        raise PolynomialError(f"chart {chart} out of range 1..{F.p}")
    if F.num_vars != W.num_vars:
        raise ValueError("F and W live in different spaces")
    rows_n = W.k + F.p - 1
    _guard(rows_n, W.num_vars)
    rows = [h.gradient() for h in W.constraints]
    rows += [omega(F, chart, j) for j in range(1, F.p + 1) if j != chart]
    fi = F[chart - 1]
    return _rank_system(W, rows, f"sigma_Fbar[chart {chart}]",
                        inequations=(Inequation(fi, "ne"),), chart=(tuple(F), chart))


def sigma_Fbar_charts(F: PolyMap, W: WorldSpec) -> list[PolySystem]:
    return [sigma_Fbar_W(F, W, i) for i in range(1, F.p + 1)]


def zero_set_system(F: PolyMap, W: WorldSpec, extra: Sequence[Polynomial] = ()) -> PolySystem:
    """V_W(F) = W intersected with {F = 0}."""
    eqs = tuple(W.constraints) + tuple(F) + tuple(extra)
    return PolySystem(eqs, (), 0, "V_W", n_world=W.k, radius=W.sample_radius)


def milnor_set(F: PolyMap, which: str = "normalized", radius=None,
               base: WorldSpec | None = None):
    """Milnor set of F ("plain") or F/||F|| ("normalized").

    With a radius, returns the slice on the sphere of that radius (one system
    for "plain", one per chart for "normalized").  Without a radius, returns the
    ambient systems in which the sphere gradient 2x is used but the sphere
    equation is not imposed; these describe the whole Milnor set in R^N.
    """
    if which not in ("plain", "normalized"):
        raise ValueError("which must be 'plain' or 'normalized'")
    N = F.num_vars
    if radius is not None:
        r = Fraction(radius)
        if r <= 0:
            raise ValueError("non-positive radius")
        W = base.at_radius(r) if base is not None else WorldSpec.sphere(N, r)
        return sigma_F_W(F, W) if which == "plain" else sigma_Fbar_charts(F, W)
    grad_rho = rho(N).gradient()
    if which == "plain":
        _guard(1 + F.p, N)
        return _rank_system(None, [grad_rho] + [f.gradient() for f in F], "M(F)")
    out = []
    for i in range(1, F.p + 1):
        _guard(F.p, N)
        rows = [grad_rho] + [omega(F, i, j) for j in range(1, F.p + 1) if j != i]
        out.append(_rank_system(None, rows, f"M(Fbar)[chart {i}]",
                                inequations=(Inequation(F[i - 1], "ne"),), chart=(tuple(F), i)))
    return out


def lagrange_system(constraints: Sequence[Polynomial], objective: Polynomial,
                    tag: str = "lagrange") -> PolySystem:
    """Square system grad l - sum lambda_i grad g_i = 0, g = 0 in (x, lambda)."""
    N = objective.num_vars
    m = len(constraints)
    if any(g.num_vars != N for g in constraints):
        raise ValueError("constraints and objective must share variables")
    total = N + m
    lam = [Polynomial.variable(total, N + i) for i in range(m)]
    gext = [g.extend(m) for g in constraints]
    lext = objective.extend(m)
    eqs = []
    for v in range(N):
        e = lext.differentiate(v)
        for li, g in zip(lam, gext):
            e = e - li * g.differentiate(v)
        eqs.append(e)
    eqs.extend(gext)
    return PolySystem(tuple(eqs), (), m, tag)


def carpeting_system(F: PolyMap, W: WorldSpec, j: int, deltas: Sequence[float],
                     sign: int = 1, drop_rest: bool = True) -> list[tuple[float, PolySystem]]:
    """Critical points of s*f_j on W ∩ V(eta) with 0 < s*f_j <= delta.

    eta collects the remaining components (or none when ``drop_rest`` is
    False, which gives the half-spaces {s*f_j > 0} of W).  Carpeting holds at
    delta when the system has no solutions.
    """
    if not 1 <= j <= F.p:
        raise PolynomialError(f"component index {j} out of range 1..{F.p}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    fj = F[j - 1] * sign
    eta = [f for k, f in enumerate(F, start=1) if k != j] if drop_rest else []
    base = lagrange_system(list(W.constraints) + eta, fj, tag=f"carpeting f{j}")
    m = base.aux_unknowns
    fx = fj.extend(m)
    out = []
    for d in deltas:
        d = Fraction(d)
        ineq = (Inequation(fx, "gt"), Inequation(d - fx, "ge"))
        out.append((float(d), replace(base, inequations=ineq, radius=W.sample_radius,
                                      n_world=0, tag=f"carpeting f{j} delta={float(d):g}")))
    return out
