from __future__ import annotations

import copy
import json

import pytest

from openbook.cli import main
from openbook.pipeline import consistency_report, run
from openbook.polyring import PolyMap
from openbook.scenario import BUILTINS, ScenarioError, builtin, from_dict, list_builtins, load_scenario
from openbook.systems import WorldSpec

XYZ = ["x", "y", "z"]

MINIMAL = {
    "name": "pair",
    "variables": ["x", "y", "z"],
    "map": ["x", "y"],
    "world": {"type": "sphere", "radius": 1, "sweep": [1, "1/2", "1/4"], "mode": "local"},
    "tasks": ["identities"],
}


class TestScenario:
    def test_builtins_listed(self):
        names = [n for n, _ in list_builtins()]
        for want in ("milnor-local", "milnor-global", "polar-mixed", "smooth-global", "toy-xy-sphere"):
            assert want in names
        assert list_builtins() == list_builtins()

    def test_builtin_contents(self):
        scn = builtin("smooth-global")
        assert [float(r) for r in scn.radii] == [5, 10, 20]
        assert scn.F == PolyMap.parse(["x^2 + y", "x + z"], XYZ)
        local = builtin("milnor-local")
        assert local.world.mode == "local" and local.seed == 42

    def test_file_round_trip(self, tmp_path):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(MINIMAL))
        scn = load_scenario(path)
        assert scn.name == "pair" and scn.seed == 42
        assert scn.echo() == MINIMAL

    @pytest.mark.parametrize("mutate, fragment", [
        (lambda d: d.pop("map"), "'map' is a required property"),
        (lambda d: d.update(colour="red"), "colour"),
        (lambda d: d["world"].update(type="torus"), "world/type"),
        (lambda d: d.update(seed=-1), "seed"),
        (lambda d: d["world"].update(sweep=[1, 2, 3]), "local sweeps must decrease"),
        (lambda d: d["world"].update(mode="global"), "global sweeps must increase"),
        (lambda d: d.update(map=["x +"]), "map[0]"),
        (lambda d: d.update(map=["w"]), "unknown identifier"),
    ])
    def test_errors_name_the_field(self, mutate, fragment):
        data = copy.deepcopy(MINIMAL)
        mutate(data)
        with pytest.raises(ScenarioError) as exc:
            from_dict(data)
        assert fragment in str(exc.value)

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{\n  \"name\": ")
        with pytest.raises(ScenarioError, match="line"):
            load_scenario(path)

    def test_unknown(self):
        with pytest.raises(ScenarioError):
            load_scenario("no-such-scenario")

    def test_level_set_world(self):
        data = copy.deepcopy(MINIMAL)
        data["world"] = {"type": "level-set", "constraints": ["x^2 + y^2 + z^2 - 4"], "bound": 2}
        scn = from_dict(data)
        assert scn.world.k == 1 and not scn.world.is_sphere


class TestConsistencyReport:
    def test_toy_values(self):
        F = PolyMap.parse(["x", "y"], XYZ)
        W = WorldSpec.sphere(3, 1)
        rep = consistency_report(F, W, chi_W=2, links={"1": 0, "2": 0, "1,2": 2}, fiber=1,
                                 fiber_inverted=1, fiber_G=1)
        by_name = {e["identity"]: e for e in rep["entries"]}
        full = by_name["full link difference"]
        assert (full["lhs"], full["rhs"], full["status"]) == (-2, -2, "pass")
        assert rep["failures"] == 0
        assert all("inputs" in e for e in rep["entries"] if e["status"] != "not applicable")

    def test_ex54_audit_and_claims(self):
        F = PolyMap.parse(["x^2 + y", "x + z"], XYZ)
        W = WorldSpec.sphere(3, 10)
        rep = consistency_report(F, W, chi_W=2, links={"1": 0, "2": 0, "1,2": 2}, fiber=1,
                                 claims={"fiber_chi": 1, "link_chi": {"2": 0}})
        assert rep["failures"] == 0 and not rep["disputed"]

    def test_wrong_link_fails_and_dispute_flagged(self):
        F = PolyMap.parse(["x^2 + y", "x + z"], XYZ)
        W = WorldSpec.sphere(3, 10)
        rep = consistency_report(F, W, chi_W=2, links={"1": 2, "2": 0, "1,2": 2}, fiber=1,
                                 claims={"fiber_chi": 3})
        assert rep["failures"] > 0 and rep["disputed"]


class TestCli:
    def test_list(self, capsys):
        assert main(["list"]) == 0
        out = capsys.readouterr().out
        assert "polar-mixed" in out and "toy-xy-sphere" in out

    def test_verify_identities(self, capsys):
        assert main(["verify-identities", "milnor-local"]) == 0
        out = capsys.readouterr().out
        assert "FAIL" not in out and "chart matrices" in out

    def test_bad_scenario_exit_2(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        data = copy.deepcopy(MINIMAL)
        data["map"] = ["x ^ ^ 2"]
        path.write_text(json.dumps(data))
        assert main(["run", str(path)]) == 2
        assert "map[0]" in capsys.readouterr().err

    def test_run_identities_only(self, tmp_path, capsys):
        path = tmp_path / "s.json"
        path.write_text(json.dumps(MINIMAL))
        out = tmp_path / "out"
        assert main(["run", str(path), "--out", str(out)]) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["scenario"] == MINIMAL
        assert "tolerances" in report and report["tool"]["version"]
        assert (out / "report.txt").read_text().startswith("scenario pair")
        assert (out / "solutions.csv").read_text().splitlines()[0] == "x,y,z,residual,basin_count"

    def test_exit_code_policy(self):
        scn = from_dict(copy.deepcopy(MINIMAL))
        assert run(scn).exit_code == 0


def test_builtins_cover_documented_names():
    assert set(BUILTINS) == {"milnor-local", "milnor-global", "polar-mixed", "smooth-global", "toy-xy-sphere"}
