"""Command-line entry point: ``openbook run | list | verify-identities``."""

from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from .pipeline import identity_checks, run
from .polyring import ParseError
from .scenario import ScenarioError, list_builtins, load_scenario


def _cmd_list(args) -> int:
    for name, desc in list_builtins():
        print(f"{name:<16} {desc}")
    return 0


def _cmd_run(args) -> int:
    scn = load_scenario(args.scenario)
    out = args.out or f"openbook-{scn.name}"
    res = run(scn, seed=args.seed, n_starts=args.starts, out_dir=out)
    sys.stdout.write(res.text)
    print(f"\nwrote {out}/report.json, {out}/solutions.csv, {out}/report.txt")
    return res.exit_code


def _cmd_verify(args) -> int:
    scn = load_scenario(args.scenario)
    seed = scn.seed if args.seed is None else args.seed
    checks = identity_checks(scn.F, scn.world, seed)
    for c in checks:
        print(f"{'PASS' if c['pass'] else 'FAIL'}  {c['name']:<38} cases {c['cases']:>4}  failures {c['failures']}")
    return 0 if all(c["pass"] for c in checks) else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="openbook", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every task of a scenario and write reports")
    p.add_argument("scenario", help="scenario JSON file or built-in name")
    p.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    p.add_argument("--starts", type=int, default=None, help="multistart budget per system")
    p.add_argument("--out", default=None, help="output directory (default openbook-<name>)")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("list", help="list built-in scenarios")
    p.set_defaults(func=_cmd_list)

    p = sub.add_parser("verify-identities", help="algebraic identity checks only")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ScenarioError, ParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
