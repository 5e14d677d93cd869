from __future__ import annotations

import itertools

import pytest

from openbook.euler import (
    OracleError,
    ParityError,
    SingularVarietyError,
    chi_inclusion_exclusion,
    choose_delta,
    curve_chi_oracle,
    curve_oracle,
    curve_system,
    invert_fiber_chi,
    morse_boundary,
    morse_chi_boundary,
    morse_chi_closed,
    morse_closed,
    predict_link_chi,
    single_link_fiber,
)
from openbook.polyring import PolyMap, parse_polynomial
from openbook.systems import Inequation, WorldSpec

XYZ = ["x", "y", "z"]
ABCD = ["a", "b", "c", "d"]
EX54 = PolyMap.parse(["x^2 + y", "x + z"], XYZ)


def P(t, names=XYZ):
    return parse_polynomial(t, names)


class TestMorseClosed:
    def test_sphere(self):
        assert morse_chi_closed([], WorldSpec.sphere(3, 10)) == 2

    def test_ellipse_link(self):
        assert morse_chi_closed([P("x + z")], WorldSpec.sphere(3, 10)) == 0

    def test_circle_in_r4(self):
        r = morse_closed([P("a", ABCD), P("b", ABCD)], WorldSpec.sphere(4, 10))
        assert r.chi == 0 and r.dim == 1

    def test_odd_sphere(self):
        assert morse_chi_closed([], WorldSpec.sphere(4, 1)) == 0

    def test_two_points(self):
        r = morse_closed([P("x^2 + y"), P("x + z")], WorldSpec.sphere(3, 10))
        assert r.chi == 2 and r.dim == 0

    def test_functional_invariance(self):
        W = WorldSpec.sphere(3, 2)
        got = {morse_chi_closed([P("x^2 - y*z - 1")], W, seed=s) for s in range(5)}
        assert got == {0}

    def test_records_carry_indices(self):
        r = morse_closed([], WorldSpec.sphere(3, 1), seed=3)
        assert sorted(rec.index for rec in r.records) == [0, 2]
        assert all(rec.location == "interior" for rec in r.records)

    def test_singular_variety_refused(self):
        F1 = P("(a^2+b^2)*(a+c)", ABCD)
        with pytest.raises(SingularVarietyError):
            morse_closed([F1], WorldSpec.sphere(4, 10))


class TestMorseBoundary:
    def test_cap(self):
        assert morse_chi_boundary([], P("z"), 0.3, WorldSpec.sphere(3, 1)) == 1

    def test_ex54_fiber_arc(self):
        assert morse_chi_boundary([P("x + z")], P("x^2 + y"), 0.1, WorldSpec.sphere(3, 10)) == 1

    def test_half_circle(self):
        r = morse_boundary([P("y")], P("x"), 0.01, WorldSpec.sphere(3, 1))
        assert r.chi == 1
        assert {rec.location for rec in r.records} <= {"interior", "boundary-inward"}

    def test_two_caps(self):
        # {z^2 >= 1/4} on the unit sphere is two disjoint caps
        assert morse_chi_boundary([], P("z^2"), 0.25, WorldSpec.sphere(3, 1)) == 2


class TestCurveOracle:
    def test_great_circle(self):
        sys = curve_system([P("x")], WorldSpec.sphere(3, 1))
        assert curve_chi_oracle(sys) == 0

    def test_ex54_fiber(self):
        sys = curve_system([P("x + z")], WorldSpec.sphere(3, 10), [Inequation(P("x^2 + y"), "gt")])
        rep = curve_oracle(sys)
        assert rep.chi == 1 and rep.arcs == 1

    def test_zero_dimensional_rejected(self):
        sys = curve_system([P("x"), P("y")], WorldSpec.sphere(3, 1))
        with pytest.raises(OracleError):
            curve_chi_oracle(sys)


class TestInclusionExclusion:
    def test_sphere_and_circle(self):
        # S^2 = {a+c=0} and S^1 = {a=b=0} on S^3_10 meet in two points
        pieces = [[P("a + c", ABCD)], [P("a", ABCD), P("b", ABCD)]]
        res = chi_inclusion_exclusion(pieces, WorldSpec.sphere(4, 10))
        assert res.chi == 0

    def test_disjoint_circles(self):
        W = WorldSpec.sphere(3, 2)
        res = chi_inclusion_exclusion([[P("z - 1")], [P("z + 1")]], W)
        assert res.chi == 0


class TestDelta:
    def test_ex54_grid(self):
        ch = choose_delta(EX54, WorldSpec.sphere(3, 10), 1)
        assert ch.delta is not None and ch.delta > 0


class TestParity:
    def test_spec_examples(self):
        assert predict_link_chi(1, 2, 3, 1) == 0
        assert predict_link_chi(1, 2, 3, 2) == 2
        assert predict_link_chi(5, 0, 4, 2) == 0
        assert invert_fiber_chi(0, 2, 3) == 1
        with pytest.raises(ParityError):
            invert_fiber_chi(1, 2, 4)

    def test_single_link_relation(self):
        assert single_link_fiber(0, 2, 3) == 1
        assert single_link_fiber(0, 0, 4) == 0
        with pytest.raises(ParityError):
            single_link_fiber(1, 0, 4)

    def test_composition_exhaustive(self):
        for n, l, chi in itertools.product(range(2, 9), range(1, 5), range(-3, 4)):
            chi_W = 0 if n % 2 == 0 else 2
            link = predict_link_chi(chi, chi_W, n, l)
            if l % 2:
                assert invert_fiber_chi(link, chi_W, n, l) == chi
            else:
                with pytest.raises(ParityError):
                    invert_fiber_chi(link, chi_W, n, l)

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            predict_link_chi(0, 0, 1, 1)
        with pytest.raises(ValueError):
            invert_fiber_chi(0, 0, 3, 0)
