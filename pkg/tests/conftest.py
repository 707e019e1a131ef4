import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fr2sim.channel import LinkBudget  # noqa: E402
from fr2sim.phy import BlerModel  # noqa: E402


@pytest.fixture
def model():
    return BlerModel()


@pytest.fixture
def fig5_budget():
    return LinkBudget(eirp_dbm=30.0, noise_figure_db=10.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance check, then assert it."""

    def report(criterion: str, ok: bool, detail: str):
        line = f"{criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
