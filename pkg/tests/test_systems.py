from __future__ import annotations

import random
from fractions import Fraction

import numpy as np
import pytest

from openbook.numsolve import compiled, multistart_solve
from openbook.polyring import PolyMap, PolynomialError, parse_polynomial
from openbook.systems import (
    SystemSizeError,
    WorldSpec,
    carpeting_system,
    drop_component,
    lagrange_system,
    maximal_minors,
    milnor_set,
    sigma_F_W,
    sigma_Fbar_W,
    sphere_constraint,
)
from strategies import random_map

XYZ = ["x", "y", "z"]


def P(t, names=XYZ):
    return parse_polynomial(t, names)


def residual(system, x):
    return compiled(system).rel_residual(np.array([x]))[0]


class TestDrop:
    def test_drop_last_and_first(self):
        F = PolyMap.parse(["x", "y", "z"], XYZ)
        assert drop_component(F) == PolyMap.parse(["x", "y"], XYZ)
        G = PolyMap.parse(["x^2 + y", "x + z"], XYZ)
        assert drop_component(G, 1) == PolyMap.parse(["x + z"], XYZ)

    def test_repeated_drop_and_p1(self):
        F = PolyMap.parse(["x", "y", "z"], XYZ)
        single = drop_component(drop_component(F, 3), 2)
        assert single == PolyMap.parse(["x"], XYZ)
        with pytest.raises(PolynomialError):
            drop_component(single)


class TestRankSystems:
    def test_equator(self):
        W = WorldSpec.sphere(3, 2)
        sys = sigma_F_W(PolyMap.parse(["x", "y"], XYZ), W)
        assert sys.equations[0] == sphere_constraint(3, 2)
        (minor,) = sys.equations[1:]
        assert minor in (P("2*z"), P("-2*z"))

    def test_constant_component_everywhere_critical(self):
        W = WorldSpec.sphere(3, 1)
        sys = sigma_F_W(PolyMap.parse(["x", "3"], XYZ), W)
        assert list(sys.equations) == [sphere_constraint(3, 1)]

    def test_all_minors(self):
        rows = [[P("x"), P("y"), P("z")], [P("1"), P("0"), P("0")]]
        assert sorted(m.to_string(XYZ) for m in maximal_minors(rows)) == sorted(["-y", "-z"])

    def test_fbar_empty_off_V_for_pair(self):
        # (x, y, z) parallel to (-y, x, 0) only on x = y = 0
        W = WorldSpec.sphere(3, 1)
        sys = sigma_Fbar_W(PolyMap.parse(["x", "y"], XYZ), W, 1)
        assert residual(sys, [0.0, 0.0, 1.0]) == 0.0
        assert len(multistart_solve(sys, n_starts=200, seed=1, radius=1.0)) == 0

    def test_containment_in_sigma_F(self):
        F = PolyMap.parse(["x", "x^2 + y*(x^2+y^2) + z^2"], XYZ)
        W = WorldSpec.sphere(3, Fraction(1, 10))
        sols = multistart_solve(sigma_Fbar_W(F, W, 1), n_starts=300, seed=2, radius=0.1)
        assert len(sols) > 0
        big = sigma_F_W(F, W)
        for pt in sols.points:
            assert residual(big, pt.coords) <= 1e-9

    def test_chart_consistency(self):
        rng = random.Random(7)
        F = random_map(rng, 3, 2, max_deg=2)
        W = WorldSpec.sphere(3, 1)
        s1, s2 = compiled(sigma_Fbar_W(F, W, 1)), compiled(sigma_Fbar_W(F, W, 2))
        pts = np.random.default_rng(0).standard_normal((200, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        # Gram scores agree between charts wherever both charts are defined
        assert np.allclose(s1.rank_sigma(pts), s2.rank_sigma(pts), atol=1e-8)

    def test_drop_monotone(self):
        names = ["a", "b", "c", "d"]
        F = PolyMap.parse(["a^2 + b", "a + c", "b*d"], names)
        G = drop_component(F)
        W = WorldSpec.sphere(4, 2)
        sols = multistart_solve(sigma_F_W(G, W), n_starts=200, seed=3, radius=2.0)
        assert len(sols) > 0
        big = sigma_F_W(F, W)
        for pt in sols.points:
            assert residual(big, pt.coords) <= 1e-9

    def test_size_guard(self):
        names = [f"x{i}" for i in range(9)]
        F = PolyMap.parse(names[:2], names)
        with pytest.raises(SystemSizeError):
            sigma_F_W(F, WorldSpec.sphere(9, 1))

    def test_milnor_set_radius(self):
        F = PolyMap.parse(["x", "y"], XYZ)
        sys = milnor_set(F, "plain", radius=3)
        assert sys.equations[0] == sphere_constraint(3, 3)
        with pytest.raises(ValueError):
            milnor_set(F, "plain", radius=0)


class TestLagrange:
    def test_sphere_poles(self):
        sys = lagrange_system([sphere_constraint(3, 2)], P("z"))
        assert sys.aux_unknowns == 1 and len(sys.equations) == 4
        assert residual(sys, [0, 0, 2, 0.25]) == 0.0
        assert residual(sys, [0, 0, -2, -0.25]) == 0.0

    def test_ellipse_two_points(self):
        sys = lagrange_system([P("x + z"), sphere_constraint(3, 3)], P("3/10*x - 7/10*y + 1/5*z"))
        sols = multistart_solve(sys, n_starts=300, seed=4, radius=3.0)
        assert len(sols) == 2

    def test_inconsistent(self):
        sys = lagrange_system([P("x"), P("x - 1")], P("y"))
        assert len(multistart_solve(sys, sampler="box", n_starts=100, seed=5, radius=2.0)) == 0


class TestCarpeting:
    def test_ex54_no_critical_values_near_zero(self):
        F = PolyMap.parse(["x^2 + y", "x + z"], XYZ)
        W = WorldSpec.sphere(3, 10)
        for delta, sys in carpeting_system(F, W, 1, [0.1]):
            assert len(multistart_solve(sys, n_starts=300, seed=6, radius=10.0)) == 0

    def test_pair_great_circle(self):
        F = PolyMap.parse(["x", "y"], XYZ)
        W = WorldSpec.sphere(3, 1)
        for delta, sys in carpeting_system(F, W, 1, [0.5, 2.0]):
            n = len(multistart_solve(sys, n_starts=200, seed=7, radius=1.0))
            assert n == (0 if delta < 1 else 1)

    def test_index_error(self):
        F = PolyMap.parse(["x", "y"], XYZ)
        with pytest.raises(PolynomialError):
            carpeting_system(F, WorldSpec.sphere(3, 1), 3, [0.1])
