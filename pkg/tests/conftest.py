import pytest

_LINES = []


@pytest.fixture
def report_line():
    """Record one summary line; all lines are printed at the end of the run."""
    def emit(line: str):
        _LINES.append(line)
        print(line)
    return emit


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
