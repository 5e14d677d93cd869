from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from openbook.polyring import (
    CompiledPolys,
    ParseError,
    PolyMap,
    Polynomial,
    PolynomialError,
    determinant,
    norm_squared,
    parse_polynomial,
)
from strategies import polynomials, rational_points

XYZ = ["x", "y", "z"]


def P(text, names=XYZ):
    return parse_polynomial(text, names)


class TestParse:
    def test_example_map_terms(self):
        f = P("x^2 + y*(x^2+y^2) + z^2")
        assert f.terms == {(2, 0, 0): 1, (2, 1, 0): 1, (0, 3, 0): 1, (0, 0, 2): 1}

    def test_zero(self):
        assert P("0").is_zero()
        assert P("0").terms == {}

    def test_ring_identity_cancels(self):
        assert P("(x+y)^2 - x^2 - 2*x*y - y^2").is_zero()

    def test_rationals_and_unary_minus(self):
        f = P("-(1/2)*x + 3/4 - -y")
        assert f.evaluate([Fraction(1), Fraction(1), 0]) == Fraction(5, 4)

    def test_division_by_constant(self):
        assert P("(x + 2)/4") == P("1/4*x + 1/2")

    @pytest.mark.parametrize("text, fragment", [
        ("x + w", "unknown identifier"),
        ("x^-1", "negative exponent"),
        ("x^(1/2)", "exponent"),
        ("x^y", "exponent"),
        ("x +", "unexpected"),
        ("(x + y", "expected ')'"),
        ("x $ y", "unexpected character"),
        ("", "empty"),
        ("x / y", "division"),
        ("x^2^3", "chained"),
    ])
    def test_errors(self, text, fragment):
        with pytest.raises(ParseError) as exc:
            P(text)
        assert fragment in str(exc.value)
        assert exc.value.position >= 0

    def test_error_position_points_at_token(self):
        with pytest.raises(ParseError) as exc:
            P("x + y + qq")
        assert exc.value.position == 8

    def test_degree_cap(self):
        P("x^64")
        with pytest.raises(ParseError, match="degree cap"):
            P("x^65")
        with pytest.raises(ParseError, match="degree cap"):
            P("(x^33)^2")
        with pytest.raises(ParseError, match="degree cap"):
            P("x^40*x^40")


class TestRing:
    def test_products(self):
        assert P("x") * P("x") == P("x^2")
        assert P("x+y") * P("x-y") == P("x^2 - y^2")

    def test_mismatched_vars(self):
        with pytest.raises(PolynomialError):
            P("x") + parse_polynomial("x", ["x"])

    def test_power_and_scale(self):
        assert P("x+1") ** 3 == P("x^3 + 3*x^2 + 3*x + 1")
        assert P("x").scale(Fraction(2, 3)) == P("2/3*x")

    @given(polynomials())
    def test_additive_inverse(self, a):
        assert (a - a).is_zero()

    @given(polynomials(), polynomials(), polynomials())
    @settings(max_examples=50)
    def test_distributive(self, a, b, c):
        assert a * (b + c) == a * b + a * c


class TestCalculus:
    def test_partial_y_of_example(self):
        f = P("x^2 + x^2*y + y^3 + z^2")
        assert f.differentiate(1) == P("x^2 + 3*y^2")

    def test_gradients(self):
        assert all(g.is_zero() for g in P("7").gradient())
        assert P("x^2 + y^2 + z^2").gradient() == (P("2*x"), P("2*y"), P("2*z"))

    def test_index_error(self):
        with pytest.raises(PolynomialError):
            P("x").differentiate(3)

    @given(polynomials(), polynomials(), st.integers(0, 2))
    @settings(max_examples=50)
    def test_leibniz(self, a, b, v):
        assert (a * b).differentiate(v) == a * b.differentiate(v) + b * a.differentiate(v)


class TestEvaluate:
    def test_values(self):
        assert parse_polynomial("x^2 + y", ["x", "y"]).evaluate([2, 1]) == 5
        assert Polynomial.zero(3).evaluate([1, 2, 3]) == 0

    def test_dimension_mismatch(self):
        with pytest.raises(PolynomialError):
            P("x").evaluate([1, 2])

    @given(polynomials(), polynomials(), rational_points)
    def test_additive_on_rationals(self, a, b, pt):
        assert (a + b).evaluate(pt) == a.evaluate(pt) + b.evaluate(pt)

    @given(polynomials(), rational_points)
    def test_matches_term_sum(self, a, pt):
        # independent oracle: explicit sum over terms with Fraction powers
        total = Fraction(0)
        for exp, c in a.terms.items():
            t = Fraction(c)
            for x, e in zip(pt, exp):
                t *= Fraction(x) ** e
            total += t
        assert a.evaluate(pt) == total

    @given(polynomials(max_deg=4, max_terms=8))
    @settings(max_examples=30)
    def test_compiled_float_path(self, a):
        X = np.random.default_rng(0).uniform(-2, 2, (7, 3))
        got = CompiledPolys([a]).values(X)[:, 0]
        want = [float(a.evaluate([float(v) for v in x])) for x in X]
        assert np.allclose(got, want, rtol=1e-12, atol=1e-12)


class TestPrinter:
    def test_graded_lex(self):
        assert P("z^2 + x + y^3 + x^2*y").to_string(XYZ) == "x^2*y + y^3 + z^2 + x"

    def test_rational_coefficients(self):
        assert P("1/2*x - 3/4").to_string(XYZ) == "1/2*x - 3/4"

    @given(polynomials())
    def test_round_trip(self, a):
        assert parse_polynomial(a.to_string(XYZ), XYZ) == a


class TestMaps:
    def test_norm_squared(self):
        F = PolyMap.parse(["x", "y"], XYZ)
        assert norm_squared(F) == P("x^2 + y^2")
        G = PolyMap.parse(["x", "x^2 + x^2*y + y^3 + z^2"], XYZ)
        assert norm_squared(G) == P("x^2") + P("x^2 + x^2*y + y^3 + z^2") ** 2
        assert norm_squared(PolyMap.parse(["0"], XYZ)).is_zero()

    def test_norm_squared_float_points(self):
        F = PolyMap.parse(["x*y - z", "x^2 + 1/3*y", "z^3"], XYZ)
        n2 = norm_squared(F)
        rng = np.random.default_rng(1)
        for x in rng.uniform(-2, 2, (1000, 3)):
            pt = [float(v) for v in x]
            want = sum(float(f.evaluate(pt)) ** 2 for f in F)
            assert abs(float(n2.evaluate(pt)) - want) <= 1e-9 * (1 + want)

    def test_empty_map(self):
        with pytest.raises(PolynomialError):
            PolyMap([])

    def test_determinant(self):
        rows = [[P("x"), P("y")], [P("z"), P("1")]]
        assert determinant(rows) == P("x - y*z")
