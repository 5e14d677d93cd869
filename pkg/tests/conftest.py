from __future__ import annotations

import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from openbook.pipeline import run  # noqa: E402
from openbook.scenario import builtin  # noqa: E402

_RUNS: dict[tuple[str, int], tuple[str, dict]] = {}
ACCEPTANCE_LINES: list[str] = []


def builtin_report(name: str, seed: int = 42) -> tuple[str, dict]:
    """(report.json text, parsed report) for a built-in, computed once per session."""
    key = (name, seed)
    if key not in _RUNS:
        res = run(builtin(name), seed=seed)
        _RUNS[key] = (res.json_text, json.loads(res.json_text))
    return _RUNS[key]


@pytest.fixture
def report():
    return builtin_report


@pytest.fixture
def criterion():
    def record(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
