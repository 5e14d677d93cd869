"""Normal-frame calculus for F/||F||.

The vectors omega_{i,j} = f_i grad f_j - f_j grad f_i span the normal space of
the fibres of F/||F|| away from the critical locus.  This module builds them
symbolically and checks the identities that tie them to grad(f_j/||F||).

Component indices are 1-based (f_1, ..., f_p) throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .polyring import Polynomial, PolyMap, PolynomialError

PolyVector = tuple[Polynomial, ...]

CHART_TOL = 1e-9


class ChartError(ValueError):
    """The chart condition f_i(x) != 0 (or F(x) != 0) is violated."""


def _check_index(F: PolyMap, *idx: int) -> None:
    for i in idx:
        if not 1 <= i <= F.p:
            raise PolynomialError(f"component index {i} out of range 1..{F.p}")


def vec_add(a: PolyVector, b: PolyVector) -> PolyVector:
    return tuple(x + y for x, y in zip(a, b))


def vec_scale(c: Polynomial, a: PolyVector) -> PolyVector:
    return tuple(c * x for x in a)


def is_zero_vector(a: PolyVector) -> bool:
    return all(x.is_zero() for x in a)


def omega(F: PolyMap, i: int, j: int) -> PolyVector:
    """omega_{i,j} = f_i grad f_j - f_j grad f_i."""
    _check_index(F, i, j)
    fi, fj = F[i - 1], F[j - 1]
    gi, gj = fi.gradient(), fj.gradient()
    return tuple(fi * b - fj * a for a, b in zip(gi, gj))


def milnor_equality_residual(F: PolyMap, i: int, j: int, k: int) -> PolyVector:
    """f_i w_{j,k} + f_k w_{i,j} + f_j w_{k,i}; identically zero for every F."""
    if F.p < 3:
        raise PolynomialError("the circular relation needs p >= 3")
    _check_index(F, i, j, k)
    if not i < j < k:
        raise PolynomialError(f"indices must satisfy i < j < k, got {(i, j, k)}")
    fi, fj, fk = F[i - 1], F[j - 1], F[k - 1]
    out = vec_scale(fi, omega(F, j, k))
    out = vec_add(out, vec_scale(fk, omega(F, i, j)))
    return vec_add(out, vec_scale(fj, omega(F, k, i)))


def normalized_gradient_sides(F: PolyMap, j: int) -> tuple[PolyVector, PolyVector]:
    """Both sides of ||F||^3 grad(f_j/||F||) = sum_{k != j} f_k omega_{k,j}.

    The left side is cleared of the square root:
    ||F||^2 grad f_j - f_j sum_k f_k grad f_k.
    """
    _check_index(F, j)
    n = F.num_vars
    fj = F[j - 1]
    nsq = Polynomial.zero(n)
    radial = tuple(Polynomial.zero(n) for _ in range(n))
    for f in F:
        nsq = nsq + f * f
        radial = vec_add(radial, vec_scale(f, f.gradient()))
    lhs = vec_add(vec_scale(nsq, fj.gradient()), vec_scale(-fj, radial))
    rhs = tuple(Polynomial.zero(n) for _ in range(n))
    for k in range(1, F.p + 1):
        if k != j:
            rhs = vec_add(rhs, vec_scale(F[k - 1], omega(F, k, j)))
    return lhs, rhs


def normalized_gradient_exact(F: PolyMap, j: int) -> PolyVector:
    """Symbolic difference of the two sides; the zero vector when the identity holds."""
    lhs, rhs = normalized_gradient_sides(F, j)
    return tuple(a - b for a, b in zip(lhs, rhs))


def _float_eval(polys, point) -> np.ndarray:
    return np.array([p.evaluate(point) for p in polys], dtype=float)


def _map_values(F: PolyMap, point) -> tuple[np.ndarray, np.ndarray]:
    vals = np.array([float(f.evaluate(point)) for f in F])
    grads = np.array([[float(g.evaluate(point)) for g in f.gradient()] for f in F])
    return vals, grads


def normalized_gradient_residual(F: PolyMap, j: int, point: Sequence[float]) -> float:
    """Max-norm gap between the two sides at a point off V(F).

    The left side is assembled from values and gradients of the f_k; the right
    side from the omega polynomials, so the two routes share no arithmetic.
    """
    _check_index(F, j)
    pt = [float(v) for v in point]
    vals, grads = _map_values(F, pt)
    if np.linalg.norm(vals) <= CHART_TOL:
        raise ChartError("point lies on V(F)")
    lhs = (vals @ vals) * grads[j - 1] - vals[j - 1] * (vals @ grads)
    rhs = np.zeros(F.num_vars)
    for k in range(1, F.p + 1):
        if k != j:
            rhs += vals[k - 1] * _float_eval(omega(F, k, j), pt)
    return float(np.max(np.abs(lhs - rhs), initial=0.0))


def normalized_gradient_tolerance(F: PolyMap, point: Sequence[float]) -> float:
    d = max(f.degree() for f in F)
    return 1e-9 * (1.0 + float(np.linalg.norm(point))) ** (2 * max(d, 0))


# ---------------------------------------------------------------------------
# chart matrices


@dataclass(frozen=True)
class ChartMatrix:
    chart_index: int
    entries: np.ndarray
    point: tuple[float, ...]
    det: float
    det_expected: float
    det_check: bool
    eigenvalues: tuple[float, ...]
    eigen_expected: tuple[float, ...]
    eigen_check: bool
    symmetric: bool


def chart_rows(values: Sequence[float], i: int) -> np.ndarray:
    """The p x (p-1) matrix expressing ||F||^3 grad(f_j/||F||) in omega_{i,k}.

    Row j (1-based) gives the coefficients on (omega_{i,k})_{k != i}.  Entries
    follow the chart formulas: the i-th row is (-f_k)_{k != i}; the remaining
    rows form a symmetric block with diagonal sum_{k != j} f_k^2 / f_i and
    off-diagonal -f_l f_k / f_i.
    """
    f = np.asarray(values, dtype=float)
    p = len(f)
    fi = f[i - 1]
    others = [k for k in range(1, p + 1) if k != i]  # column c <-> omega_{i, others[c]}
    M = np.zeros((p, p - 1))
    for c, k in enumerate(others):
        M[i - 1, c] = -f[k - 1]
    for j in others:
        for c, k in enumerate(others):
            if k == j:
                M[j - 1, c] = sum(f[m - 1] ** 2 for m in range(1, p + 1) if m != j) / fi
            else:
                M[j - 1, c] = -f[j - 1] * f[k - 1] / fi
    return M


def chart_matrix(F: PolyMap, i: int, point: Sequence[float]) -> ChartMatrix:
    """Symmetric (p-1) x (p-1) chart block A(x) with determinant and spectrum checks."""
    _check_index(F, i)
    if F.p < 2:
        raise PolynomialError("chart matrices need p >= 2")
    pt = tuple(float(v) for v in point)
    vals = np.array([float(f.evaluate(pt)) for f in F])
    fi = vals[i - 1]
    if abs(fi) <= CHART_TOL:
        raise ChartError(f"|f_{i}(x)| <= {CHART_TOL}")
    p = F.p
    rows = chart_rows(vals, i)
    A = np.delete(rows, i - 1, axis=0)
    nsq = float(vals @ vals)
    scale = max(np.abs(A).max(), 1e-300)
    symmetric = bool(np.abs(A - A.T).max() <= 1e-12 * scale)
    det = float(np.linalg.det(A))
    # ||F||^{2(p-2)} f_i^{3-p}: for p = 2 this is f_i itself, no division
    expected = nsq ** (p - 2) * fi ** (3 - p)
    det_ok = abs(det - expected) <= 1e-9 * max(abs(expected), 1e-300)
    eig = np.sort(np.linalg.eigvalsh((A + A.T) / 2))
    want = np.sort(np.array([nsq / fi] * (p - 2) + [fi]))
    eig_scale = max(np.abs(want).max(), 1e-300)
    eig_ok = bool(np.abs(eig - want).max() <= 1e-8 * eig_scale)
    return ChartMatrix(i, A, pt, det, float(expected), bool(det_ok),
                       tuple(float(e) for e in eig), tuple(float(w) for w in want),
                       eig_ok, symmetric)


def chart_identity_residual(F: PolyMap, i: int, point: Sequence[float]) -> float:
    """Relative gap in ||F||^3 grad(f_j/||F||) = M(x) [omega_{i,k}]_k for all j."""
    pt = [float(v) for v in point]
    vals, grads = _map_values(F, pt)
    if abs(vals[i - 1]) <= CHART_TOL:
        raise ChartError(f"|f_{i}(x)| <= {CHART_TOL}")
    nsq = float(vals @ vals)
    lhs = nsq * grads - np.outer(vals, vals @ grads)  # ||F||^3 grad(f_j/||F||), row j
    W = np.array([_float_eval(omega(F, i, k), pt) for k in range(1, F.p + 1) if k != i])
    rhs = chart_rows(vals, i) @ W
    scale = max(np.abs(lhs).max(), np.abs(rhs).max(), 1e-300)
    return float(np.abs(lhs - rhs).max() / scale)


def numeric_rank(M: np.ndarray, rel: float = 1e-9, abs_floor: float = 1e-12) -> int:
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    if s[0] <= abs_floor:
        return 0
    return int(np.sum(s > rel * s[0]))


def omega_frame(F: PolyMap, point: Sequence[float]) -> np.ndarray:
    pt = [float(v) for v in point]
    rows = [_float_eval(omega(F, i, j), pt) for i, j in combinations(range(1, F.p + 1), 2)]
    return np.array(rows).reshape(len(rows), F.num_vars)


def normal_frame_rank(F: PolyMap, point: Sequence[float]) -> int:
    """Numeric rank of the stacked omega_{i,j}(x), i < j; at most p - 1."""
    pt = [float(v) for v in point]
    vals = np.array([float(f.evaluate(pt)) for f in F])
    if np.linalg.norm(vals) <= CHART_TOL:
        raise ChartError("point lies on V(F)")
    return numeric_rank(omega_frame(F, pt))
