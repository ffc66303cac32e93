from __future__ import annotations

import pytest

from intakesim.profiles import load_feature_bank
from intakesim.scales import load_repository

# Acceptance tests append (number, passed, detail) here; printed in the terminal summary.
ACCEPTANCE_LINES: list[tuple[int, bool, str]] = []


@pytest.fixture(scope="session")
def repo():
    return load_repository()


@pytest.fixture(scope="session")
def bank():
    return load_feature_bank()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
