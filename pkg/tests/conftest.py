import pytest

ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict():
    """Record the one-line verdict of an acceptance criterion."""
    def record(number, passed, text):
        ACCEPTANCE_LINES[number] = f"{'PASS' if passed else 'FAIL'}  [{number:>2d}] {text}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
