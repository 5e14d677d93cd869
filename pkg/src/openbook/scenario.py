"""Scenario files (JSON) and the built-in example scenarios."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any

import jsonschema

from .polyring import ParseError, PolyMap, parse_polynomial
from .systems import WorldSpec

TASKS = ("identities", "conditions", "euler", "consistency")

_number = {"oneOf": [{"type": "number", "exclusiveMinimum": 0},
                     {"type": "string", "pattern": r"^\s*\d+(\s*/\s*\d+|\.\d*)?\s*$"}]}

SCHEMA: dict[str, Any] = {
    "type": "object",
    "required": ["name", "variables", "map", "world"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "description": {"type": "string"},
        "variables": {"type": "array", "minItems": 1, "uniqueItems": True,
                      "items": {"type": "string", "pattern": r"^[A-Za-z_][A-Za-z_0-9]*$"}},
        "map": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        "world": {
            "type": "object",
            "required": ["type"],
            "additionalProperties": False,
            "properties": {
                "type": {"enum": ["sphere", "level-set"]},
                "radius": _number,
                "sweep": {"type": "array", "items": _number},
                "mode": {"enum": ["local", "global"]},
                "constraints": {"type": "array", "minItems": 1, "items": {"type": "string"}},
                "bound": _number,
            },
        },
        "tasks": {"type": "array", "uniqueItems": True, "items": {"enum": list(TASKS)}},
        "seed": {"type": "integer", "minimum": 0},
        "n_starts": {"type": "integer", "minimum": 1},
        "chi_starts": {"type": "integer", "minimum": 1},
        "link_pieces": {
            "type": "object",
            "patternProperties": {r"^\d+(,\d+)*$": {
                "type": "array", "minItems": 1,
                "items": {"type": "array", "minItems": 1, "items": {"type": "string"}}}},
            "additionalProperties": False,
        },
        "paper_claims": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "fiber_chi": {"type": "integer"},
                "link_chi": {"type": "object", "patternProperties": {r"^\d+(,\d+)*$": {"type": "integer"}},
                             "additionalProperties": False},
            },
        },
        "witness_checks": {
            "type": "object",
            "additionalProperties": {"type": "array", "minItems": 1, "items": {"type": "string"}},
        },
    },
}


class ScenarioError(ValueError):
    pass


def _frac(v) -> Fraction:
    return Fraction(str(v).replace(" ", ""))


def index_key(I) -> str:
    return ",".join(str(i) for i in I)


def parse_key(key: str) -> tuple[int, ...]:
    return tuple(int(k) for k in key.split(","))


@dataclass
class Scenario:
    name: str
    variables: list[str]
    F: PolyMap
    world: WorldSpec
    tasks: list[str]
    seed: int = 42
    n_starts: int = 300
    chi_starts: int = 400
    description: str = ""
    link_pieces: dict = field(default_factory=dict)
    paper_claims: dict = field(default_factory=dict)
    witness_checks: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def radii(self) -> list[Fraction]:
        return list(self.world.radii())

    def echo(self) -> dict:
        return copy.deepcopy(self.raw)


def _parse_all(texts, names, where: str):
    out = []
    for k, t in enumerate(texts):
        try:
            out.append(parse_polynomial(t, names))
        except ParseError as exc:
            raise ScenarioError(f"{where}[{k}]: {exc}") from exc
    return out


def from_dict(data: dict) -> Scenario:
    try:
        jsonschema.validate(data, SCHEMA)
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ScenarioError(f"schema violation at {path}: {exc.message}") from exc
    names = list(data["variables"])
    F = PolyMap(_parse_all(data["map"], names, "map"))
    w = data["world"]
    mode = w.get("mode", "global")
    sweep = [_frac(s) for s in w.get("sweep", [])]
    if any(s <= 0 for s in sweep):
        raise ScenarioError("world/sweep: radii must be positive")
    if len(sweep) > 1:
        inc = all(b > a for a, b in zip(sweep, sweep[1:]))
        dec = all(b < a for a, b in zip(sweep, sweep[1:]))
        if mode == "global" and not inc:
            raise ScenarioError("world/sweep: global sweeps must increase")
        if mode == "local" and not dec:
            raise ScenarioError("world/sweep: local sweeps must decrease")
    if w["type"] == "sphere":
        if "radius" in w:
            radius = _frac(w["radius"])
        elif sweep:
            radius = sweep[0]
        else:
            raise ScenarioError("world: a sphere needs a radius or a sweep")
        world = WorldSpec.sphere(len(names), radius, mode, sweep)
    else:
        if "constraints" not in w or "bound" not in w:
            raise ScenarioError("world: level-set worlds need 'constraints' and 'bound'")
        cons = tuple(_parse_all(w["constraints"], names, "world/constraints"))
        world = WorldSpec(cons, len(names), None, mode, (), float(_frac(w["bound"])))
    for key, pieces in data.get("link_pieces", {}).items():
        I = parse_key(key)
        if any(not 1 <= i <= F.p for i in I):
            raise ScenarioError(f"link_pieces/{key}: index out of range 1..{F.p}")
        for piece in pieces:
            _parse_all(piece, names, f"link_pieces/{key}")
    for key, eqs in data.get("witness_checks", {}).items():
        _parse_all(eqs, names, f"witness_checks/{key}")
    return Scenario(
        name=data["name"],
        variables=names,
        F=F,
        world=world,
        tasks=list(data.get("tasks", TASKS)),
        seed=int(data.get("seed", 42)),
        n_starts=int(data.get("n_starts", 300)),
        chi_starts=int(data.get("chi_starts", 400)),
        description=data.get("description", ""),
        link_pieces=dict(data.get("link_pieces", {})),
        paper_claims=dict(data.get("paper_claims", {})),
        witness_checks=dict(data.get("witness_checks", {})),
        raw=copy.deepcopy(data),
    )


def load_scenario(path: str | Path) -> Scenario:
    p = Path(path)
    if not p.exists():
        if str(path) in BUILTINS:
            return builtin(str(path))
        raise ScenarioError(f"no such scenario file or built-in: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{p}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    return from_dict(data)


_EX51 = ["x", "x^2 + y*(x^2+y^2) + z^2"]

BUILTINS: dict[str, dict] = {
    "milnor-local": {
        "name": "milnor-local",
        "description": "(x, x^2+y(x^2+y^2)+z^2) on small spheres: isolated singularity, normalized map not a fibration",
        "variables": ["x", "y", "z"],
        "map": _EX51,
        "world": {"type": "sphere", "radius": "1/10", "sweep": ["1/5", "1/10", "1/20", "1/40"], "mode": "local"},
        "tasks": ["identities", "conditions"],
        "seed": 42,
        "n_starts": 300,
        "witness_checks": {
            "z!=0 branch": ["2*y - x^2 - 3*y^2", "x^2 + y^3 + z^2 - x^2*y"],
            "z=0 curve (minor expansion)": ["z", "x^4 + y^4 + 2*x^2*y^2 - x^2*y"],
            "z=0 curve (as printed)": ["z", "x^4 + y^4 + 2*x^2*y^2 - x*y^2"],
        },
    },
    "milnor-global": {
        "name": "milnor-global",
        "description": "(x, x^2+y(x^2+y^2)+z^2) on large spheres: bounded Milnor set, fibration at infinity",
        "variables": ["x", "y", "z"],
        "map": _EX51,
        "world": {"type": "sphere", "radius": 8, "sweep": [2, 4, 8, 16], "mode": "global"},
        "tasks": list(TASKS),
        "seed": 42,
        "n_starts": 300,
    },
    "polar-mixed": {
        "name": "polar-mixed",
        "description": "real form ((a^2+b^2)(a+c), (a^2+b^2)(b+d)) of the mixed polynomial x(x+y)conj(x) on S^3_R",
        "variables": ["a", "b", "c", "d"],
        "map": ["(a^2+b^2)*(a+c)", "(a^2+b^2)*(b+d)"],
        "world": {"type": "sphere", "radius": 10, "sweep": [5, 10, 20], "mode": "global"},
        "tasks": list(TASKS),
        "seed": 42,
        "n_starts": 300,
        "link_pieces": {
            "1": [["a+c"], ["a", "b"]],
            "2": [["b+d"], ["a", "b"]],
            "1,2": [["a", "b"], ["a+c", "b+d"]],
        },
        "paper_claims": {"fiber_chi": 1, "link_chi": {"1": 2}},
    },
    "smooth-global": {
        "name": "smooth-global",
        "description": "(x^2+y, x+z) on S^2_R: no singularities, empty Milnor set, arc fibers",
        "variables": ["x", "y", "z"],
        "map": ["x^2 + y", "x + z"],
        "world": {"type": "sphere", "radius": 10, "sweep": [5, 10, 20], "mode": "global"},
        "tasks": list(TASKS),
        "seed": 42,
        "n_starts": 500,
        "paper_claims": {"fiber_chi": 1, "link_chi": {"2": 0}},
    },
    "toy-xy-sphere": {
        "name": "toy-xy-sphere",
        "description": "(x, y) on the unit sphere: every characteristic checkable by hand",
        "variables": ["x", "y", "z"],
        "map": ["x", "y"],
        "world": {"type": "sphere", "radius": 1, "sweep": [1, "1/2", "1/4"], "mode": "local"},
        "tasks": list(TASKS),
        "seed": 42,
        "n_starts": 300,
    },
}


def builtin(name: str) -> Scenario:
    if name not in BUILTINS:
        raise ScenarioError(f"unknown built-in {name!r}; try one of {', '.join(sorted(BUILTINS))}")
    return from_dict(copy.deepcopy(BUILTINS[name]))


def list_builtins() -> list[tuple[str, str]]:
    return [(k, BUILTINS[k]["description"]) for k in sorted(BUILTINS)]
