import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_LINES = []


@pytest.fixture
def report_line():
    """Record a one-line criterion verdict shown in the terminal summary."""
    def emit(text):
        print(text)
        _LINES.append(text)
    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
