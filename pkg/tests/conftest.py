from pathlib import Path

import pytest
from hypothesis import settings

from tests.helpers import ACCEPTANCE_LINES

settings.register_profile("default", deadline=None, max_examples=25)
settings.load_profile("default")

SCENARIO_DIR = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def scenario_dir():
    return SCENARIO_DIR


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
