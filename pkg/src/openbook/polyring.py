"""Sparse multivariate polynomials with exact rational coefficients.

A :class:`Polynomial` maps exponent tuples to :class:`fractions.Fraction`
coefficients.  Instances are immutable and canonical (no zero terms), so two
equal polynomials always have identical term maps.  A separate float fast path
(:class:`CompiledPolys`) evaluates many polynomials at many points with numpy.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational
from typing import Iterable, Mapping, Sequence

import numpy as np

MAX_DEGREE_PER_VAR = 64

Exponent = tuple[int, ...]


class PolynomialError(ValueError):
    """Raised on malformed polynomial input or incompatible operands."""


class ParseError(PolynomialError):
    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        super().__init__(f"{message} at position {position}")


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, Rational)):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise PolynomialError(f"cannot use {type(value).__name__} as a coefficient")


class Polynomial:
    """Immutable sparse polynomial in ``num_vars`` variables."""

    __slots__ = ("num_vars", "_terms", "_hash")

    def __init__(self, num_vars: int, terms: Mapping[Exponent, object] | None = None):
        if num_vars < 0:
            raise PolynomialError("num_vars must be non-negative")
        clean: dict[Exponent, Fraction] = {}
        for exp, coeff in (terms or {}).items():
            exp = tuple(int(e) for e in exp)
            if len(exp) != num_vars:
                raise PolynomialError(
                    f"exponent {exp} has length {len(exp)}, expected {num_vars}")
            if any(e < 0 for e in exp):
                raise PolynomialError(f"negative exponent in {exp}")
            c = _as_fraction(coeff)
            if c:
                clean[exp] = clean.get(exp, Fraction(0)) + c
                if not clean[exp]:
                    del clean[exp]
        self.num_vars = num_vars
        self._terms = clean
        self._hash = None

    # construction helpers -------------------------------------------------
    @classmethod
    def constant(cls, num_vars: int, value) -> "Polynomial":
        return cls(num_vars, {(0,) * num_vars: value})

    @classmethod
    def zero(cls, num_vars: int) -> "Polynomial":
        return cls(num_vars)

    @classmethod
    def variable(cls, num_vars: int, index: int) -> "Polynomial":
        if not 0 <= index < num_vars:
            raise PolynomialError(f"variable index {index} out of range")
        exp = [0] * num_vars
        exp[index] = 1
        return cls(num_vars, {tuple(exp): 1})

    @classmethod
    def _raw(cls, num_vars: int, terms: dict[Exponent, Fraction]) -> "Polynomial":
        # trusted constructor: terms already canonical
        obj = cls.__new__(cls)
        obj.num_vars = num_vars
        obj._terms = terms
        obj._hash = None
        return obj

    # inspection -----------------------------------------------------------
    @property
    def terms(self) -> dict[Exponent, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not any(e) for e in self._terms)

    def constant_value(self) -> Fraction:
        return self._terms.get((0,) * self.num_vars, Fraction(0))

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self._terms), default=-1)

    def degree_in(self, index: int) -> int:
        return max((e[index] for e in self._terms), default=-1)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.num_vars == other.num_vars and self._terms == other._terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.constant(self.num_vars, other)
        return NotImplemented

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.num_vars, frozenset(self._terms.items())))
        return self._hash

    # arithmetic -----------------------------------------------------------
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.num_vars != self.num_vars:
                raise PolynomialError(
                    f"mismatched num_vars: {self.num_vars} vs {other.num_vars}")
            return other
        return Polynomial.constant(self.num_vars, other)

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        terms = dict(self._terms)
        for exp, c in other._terms.items():
            s = terms.get(exp, 0) + c
            if s:
                terms[exp] = s
            else:
                terms.pop(exp, None)
        return Polynomial._raw(self.num_vars, terms)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.num_vars, {e: -c for e, c in self._terms.items()})

    def __pos__(self) -> "Polynomial":
        return self

    def __sub__(self, other) -> "Polynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Polynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Polynomial":
        if not isinstance(other, Polynomial):
            c = _as_fraction(other)
            if not c:
                return Polynomial.zero(self.num_vars)
            return Polynomial._raw(self.num_vars, {e: v * c for e, v in self._terms.items()})
        other = self._coerce(other)
        terms: dict[Exponent, Fraction] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                exp = tuple(a + b for a, b in zip(e1, e2))
                terms[exp] = terms.get(exp, 0) + c1 * c2
        return Polynomial._raw(self.num_vars, {e: c for e, c in terms.items() if c})

    __rmul__ = __mul__

    def scale(self, factor) -> "Polynomial":
        return self * _as_fraction(factor)

    def __truediv__(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if not other.is_constant():
                raise PolynomialError("division only by nonzero constants")
            other = other.constant_value()
        c = _as_fraction(other)
        if not c:
            raise ZeroDivisionError("polynomial division by zero")
        return self * (1 / c)

    def __pow__(self, n: int) -> "Polynomial":
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise PolynomialError("exponent must be a non-negative integer")
        result = Polynomial.constant(self.num_vars, 1)
        base = self
        while n:
            if n & 1:
                result = result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # calculus -------------------------------------------------------------
    def differentiate(self, index: int) -> "Polynomial":
        if not 0 <= index < self.num_vars:
            raise PolynomialError(f"variable index {index} out of range 0..{self.num_vars - 1}")
        terms: dict[Exponent, Fraction] = {}
        for exp, c in self._terms.items():
            k = exp[index]
            if k:
                new = exp[:index] + (k - 1,) + exp[index + 1:]
                terms[new] = c * k
        return Polynomial._raw(self.num_vars, terms)

    def gradient(self) -> tuple["Polynomial", ...]:
        return tuple(self.differentiate(i) for i in range(self.num_vars))

    def substitute(self, index: int, value) -> "Polynomial":
        """Fix variable ``index`` to a rational ``value`` (variable count kept)."""
        v = _as_fraction(value)
        terms: dict[Exponent, Fraction] = {}
        for exp, c in self._terms.items():
            new = exp[:index] + (0,) + exp[index + 1:]
            terms[new] = terms.get(new, 0) + c * v ** exp[index]
        return Polynomial(self.num_vars, terms)

    def extend(self, extra: int) -> "Polynomial":
        """Embed into a ring with ``extra`` trailing variables."""
        return Polynomial._raw(self.num_vars + extra,
                               {e + (0,) * extra: c for e, c in self._terms.items()})

    # evaluation -----------------------------------------------------------
    def evaluate(self, point: Sequence):
        """Evaluate at ``point``.

        Rational inputs (int/Fraction) give an exact Fraction.  Any float in the
        point switches to float arithmetic: each term is rounded to nearest and
        the terms are summed with :func:`math.fsum`.
        """
        if len(point) != self.num_vars:
            raise PolynomialError(
                f"point has dimension {len(point)}, expected {self.num_vars}")
        if all(isinstance(v, (int, Fraction)) for v in point):
            total = Fraction(0)
            for exp, c in self._terms.items():
                term = c
                for v, e in zip(point, exp):
                    if e:
                        term *= Fraction(v) ** e
                total += term
            return total
        pt = [float(v) for v in point]
        vals = []
        for exp, c in self._terms.items():
            term = float(c)
            for v, e in zip(pt, exp):
                if e:
                    term *= v ** e
            vals.append(term)
        return math.fsum(vals)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (list, tuple, np.ndarray)):
            point = tuple(point[0])
        return self.evaluate(point)

    def abs_scale(self, radius: float) -> float:
        """Bound on |self| over the ball of the given radius: sum |c| r^deg."""
        return float(sum(abs(c) * radius ** sum(e) for e, c in self._terms.items()))

    # printing -------------------------------------------------------------
    def sorted_terms(self) -> list[tuple[Exponent, Fraction]]:
        # graded lexicographic, highest first
        return sorted(self._terms.items(), key=lambda t: (sum(t[0]), t[0]), reverse=True)

    def to_string(self, names: Sequence[str] | None = None) -> str:
        names = list(names) if names is not None else default_names(self.num_vars)
        if len(names) != self.num_vars:
            raise PolynomialError("wrong number of variable names")
        if not self._terms:
            return "0"
        pieces = []
        for exp, c in self.sorted_terms():
            mono = "*".join(
                names[i] if e == 1 else f"{names[i]}^{e}"
                for i, e in enumerate(exp) if e)
            mag = abs(c)
            if not mono:
                body = _fmt_fraction(mag)
            elif mag == 1:
                body = mono
            else:
                body = f"{_fmt_fraction(mag)}*{mono}"
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        first_sign, first_body = pieces[0]
        out = ("-" if first_sign == "-" else "") + first_body
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self) -> str:
        return self.to_string()

    def __repr__(self) -> str:
        return f"Polynomial({self.num_vars}, {self.to_string()!r})"


def _fmt_fraction(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


def default_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def variables(names: Sequence[str]) -> tuple[Polynomial, ...]:
    n = len(names)
    return tuple(Polynomial.variable(n, i) for i in range(n))


# ---------------------------------------------------------------------------
# parsing

_TOKEN = re.compile(r"\s*(?:(\d+)|([A-Za-z_][A-Za-z_0-9]*)|(\*\*|[-+*/^()]))")


class _Parser:
    """Recursive descent over the grammar

        expr   := term (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := ('+' | '-') unary | power
        power  := atom ('^' INT)?
        atom   := INT | NAME | '(' expr ')'

    ``/`` is allowed only with a constant divisor, so rational literals such as
    ``3/4*x`` parse naturally.
    """

    def __init__(self, text: str, names: Sequence[str]):
        self.text = text
        self.names = {name: i for i, name in enumerate(names)}
        if len(self.names) != len(names):
            raise PolynomialError("duplicate variable names")
        self.n = len(names)
        self.tokens = self._tokenize(text)
        self.pos = 0

    def _tokenize(self, text):
        tokens = []
        i = 0
        while i < len(text):
            if text[i].isspace():
                i += 1
                continue
            m = _TOKEN.match(text, i)
            if not m or m.end() == i:
                raise ParseError(f"unexpected character {text[i]!r}", i, text)
            start = m.start(m.lastindex)
            kind = ("int", "name", "op")[m.lastindex - 1]
            val = m.group(m.lastindex)
            if val == "**":
                val = "^"
            tokens.append((kind, val, start))
            i = m.end()
        tokens.append(("end", "", len(text)))
        return tokens

    def peek(self):
        return self.tokens[self.pos]

    def take(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, val):
        tok = self.take()
        if tok[1] != val or tok[0] == "end":
            raise ParseError(f"expected {val!r}, found {tok[1] or 'end of input'!r}", tok[2], self.text)

    def parse(self) -> Polynomial:
        if self.peek()[0] == "end":
            raise ParseError("empty expression", 0, self.text)
        result = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise ParseError(f"unexpected token {tok[1]!r}", tok[2], self.text)
        return result

    def expr(self) -> Polynomial:
        value = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            value = value + rhs if op == "+" else value - rhs
        return value

    def term(self) -> Polynomial:
        value = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            _, op, pos = self.take()
            rhs = self.unary()
            if op == "*":
                value = value * rhs
            else:
                if not rhs.is_constant() or rhs.is_zero():
                    raise ParseError("division only by a nonzero constant", pos, self.text)
                value = value / rhs.constant_value()
            self._check_degree(value, pos)
        return value

    def unary(self) -> Polynomial:
        tok = self.peek()
        if tok[0] == "op" and tok[1] in ("+", "-"):
            self.take()
            inner = self.unary()
            return -inner if tok[1] == "-" else inner
        return self.power()

    def power(self) -> Polynomial:
        base = self.atom()
        if self.peek()[1] == "^" and self.peek()[0] == "op":
            pos = self.take()[2]
            tok = self.peek()
            if tok[0] == "op" and tok[1] == "-":
                raise ParseError("negative exponent", tok[2], self.text)
            if tok[0] != "int":
                raise ParseError("exponent must be a non-negative integer literal", tok[2], self.text)
            self.take()
            k = int(tok[1])
            if k * max(0, max((base.degree_in(i) for i in range(self.n)), default=0)) > MAX_DEGREE_PER_VAR:
                raise ParseError(f"degree cap {MAX_DEGREE_PER_VAR} per variable exceeded", pos, self.text)
            if self.peek()[1] == "^" and self.peek()[0] == "op":
                raise ParseError("chained exponents are ambiguous; use parentheses", self.peek()[2], self.text)
            base = base ** k
        return base

    def atom(self) -> Polynomial:
        kind, val, pos = self.take()
        if kind == "int":
            return Polynomial.constant(self.n, int(val))
        if kind == "name":
            if val not in self.names:
                raise ParseError(f"unknown identifier {val!r}", pos, self.text)
            return Polynomial.variable(self.n, self.names[val])
        if kind == "op" and val == "(":
            inner = self.expr()
            self.expect(")")
            return inner
        raise ParseError(f"unexpected {val or 'end of input'!r}", pos, self.text)

    def _check_degree(self, value: Polynomial, pos: int):
        for i in range(self.n):
            if value.degree_in(i) > MAX_DEGREE_PER_VAR:
                raise ParseError(f"degree cap {MAX_DEGREE_PER_VAR} per variable exceeded", pos, self.text)


def parse_polynomial(text: str, names: Sequence[str]) -> Polynomial:
    """Parse an infix expression over the declared variable names."""
    return _Parser(text, names).parse()


# ---------------------------------------------------------------------------
# maps


class PolyMap:
    """Ordered tuple of polynomials F = (f_1, ..., f_p) sharing num_vars."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable[Polynomial]):
        comps = tuple(components)
        if not comps:
            raise PolynomialError("a PolyMap needs at least one component")
        n = comps[0].num_vars
        if any(c.num_vars != n for c in comps):
            raise PolynomialError("all components must share num_vars")
        self.components = comps

    @classmethod
    def parse(cls, texts: Sequence[str], names: Sequence[str]) -> "PolyMap":
        return cls(parse_polynomial(t, names) for t in texts)

    @property
    def p(self) -> int:
        return len(self.components)

    @property
    def num_vars(self) -> int:
        return self.components[0].num_vars

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyMap) and self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def subset(self, indices: Sequence[int]) -> "PolyMap":
        """f_I for a tuple of 0-based component indices."""
        return PolyMap(self.components[i] for i in indices)

    def jacobian(self) -> list[tuple[Polynomial, ...]]:
        return [c.gradient() for c in self.components]

    def evaluate(self, point: Sequence):
        return [c.evaluate(point) for c in self.components]

    def to_strings(self, names: Sequence[str] | None = None) -> list[str]:
        return [c.to_string(names) for c in self.components]

    def __repr__(self) -> str:
        return f"PolyMap({self.to_strings()!r})"


def norm_squared(F: PolyMap) -> Polynomial:
    """||F||^2 = f_1^2 + ... + f_p^2, exactly."""
    total = Polynomial.zero(F.num_vars)
    for f in F:
        total = total + f * f
    return total


def gradient(a: Polynomial) -> tuple[Polynomial, ...]:
    return a.gradient()


def differentiate(a: Polynomial, index: int) -> Polynomial:
    return a.differentiate(index)


def determinant(rows: Sequence[Sequence[Polynomial]]) -> Polynomial:
    """Exact determinant of a small square polynomial matrix (Laplace expansion)."""
    n = len(rows)
    if any(len(r) != n for r in rows):
        raise PolynomialError("determinant needs a square matrix")
    if n == 0:
        raise PolynomialError("empty matrix")
    return _det(tuple(tuple(r) for r in rows), tuple(range(n)))


def _det(rows, cols):
    if len(rows) == 1:
        return rows[0][cols[0]]
    total = None
    for k, c in enumerate(cols):
        entry = rows[0][c]
        if entry.is_zero():
            continue
        minor = _det(rows[1:], cols[:k] + cols[k + 1:])
        term = entry * minor
        total = term if total is None else (total - term if k % 2 else total + term)
    return total if total is not None else Polynomial.zero(rows[0][0].num_vars)


# ---------------------------------------------------------------------------
# float fast path


class CompiledPolys:
    """Vectorized float evaluation of a list of polynomials.

    Coefficients are rounded to double precision once; no exactness is claimed.
    ``values(X)`` takes an (S, n) array and returns (S, m).
    """

    def __init__(self, polys: Sequence[Polynomial], num_vars: int | None = None):
        self.num_vars = polys[0].num_vars if polys else (num_vars or 0)
        self.m = len(polys)
        monos: dict[Exponent, int] = {}
        for p in polys:
            if p.num_vars != self.num_vars:
                raise PolynomialError("mismatched num_vars in compiled batch")
            for e in p._terms:
                monos.setdefault(e, len(monos))
        if not monos:
            monos[(0,) * self.num_vars] = 0
        self.exponents = np.array(list(monos), dtype=np.int64).reshape(len(monos), self.num_vars)
        self.coeffs = np.zeros((self.m, len(monos)))
        for i, p in enumerate(polys):
            for e, c in p._terms.items():
                self.coeffs[i, monos[e]] = float(c)
        self.abs_coeffs = np.abs(self.coeffs)
        self.max_deg = int(self.exponents.max(initial=0))

    def monomials(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        S = X.shape[0]
        if S <= 32:  # small batches: one broadcast beats the per-variable loop
            return np.prod(X[:, None, :] ** self.exponents[None], axis=2)
        out = np.ones((S, self.exponents.shape[0]))
        for v in range(self.num_vars):
            col = self.exponents[:, v]
            if not col.any():
                continue
            powers = X[:, v:v + 1] ** np.arange(self.max_deg + 1)
            out *= powers[:, col]
        return out

    def values(self, X: np.ndarray) -> np.ndarray:
        return self.monomials(X) @ self.coeffs.T

    def term_scale(self, U: np.ndarray) -> np.ndarray:
        """Sum of |c| * |u^e| with u the supplied (positive) magnitudes."""
        return self.monomials(np.abs(U)) @ self.abs_coeffs.T


class CompiledSystem:
    """Values and Jacobians of a polynomial system on the float path."""

    def __init__(self, polys: Sequence[Polynomial]):
        if not polys:
            raise PolynomialError("empty system")
        self.polys = list(polys)
        self.num_vars = polys[0].num_vars
        self.m = len(polys)
        self.f = CompiledPolys(self.polys)
        derivs = [p.differentiate(v) for p in self.polys for v in range(self.num_vars)]
        self.df = CompiledPolys(derivs, self.num_vars)

    def values(self, X: np.ndarray) -> np.ndarray:
        return self.f.values(X)

    def jacobian(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(X)
        return self.df.values(X).reshape(X.shape[0], self.m, self.num_vars)

    def term_scale(self, U: np.ndarray) -> np.ndarray:
        return self.f.term_scale(U)
