from __future__ import annotations

from pathlib import Path

import pytest

from teamcoach.transcript import Transcript, load_transcript

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance: dict[str, str] = {}


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES


@pytest.fixture
def team_three() -> Transcript:
    return load_transcript(FIXTURES / "team_three.json")


def pytest_runtest_logreport(report: pytest.TestReport) -> None:
    if "test_acceptance.py::" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome != "passed":
        _acceptance[name] = "FAIL" if report.outcome == "failed" else report.outcome.upper()
        if report.outcome == "passed":
            _acceptance[name] = "PASS"


def pytest_terminal_summary(terminalreporter) -> None:
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_acceptance, key=lambda n: int(n.split("_")[1][2:])):
        terminalreporter.write_line(f"{_acceptance[name]:4} {name}")
