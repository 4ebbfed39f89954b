import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from netctl.instances import braess, pigou  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def pigou1():
    return pigou(1)


@pytest.fixture
def braess1():
    return braess(1)


@pytest.fixture
def record_criterion():
    """Record one PASS/FAIL line per acceptance criterion, then assert it."""

    def record(number, title, passed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES.append(f"criterion {number:>2} [{status}] {title}" + (f": {detail}" if detail else ""))
        assert passed, f"criterion {number} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
