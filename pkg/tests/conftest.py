import pytest

# (criterion number, PASS/FAIL, detail), filled by tests/test_acceptance.py
ACCEPTANCE_LINES: list[tuple[int, str, str]] = []


@pytest.fixture
def criterion():
    """Record one pass/fail line for an acceptance criterion, then assert it."""

    def record(number: int, ok: bool, detail: str) -> None:
        line = (number, "PASS" if ok else "FAIL", detail)
        ACCEPTANCE_LINES.append(line)
        print(f"criterion {number}: {line[1]} - {detail}")
        assert ok, detail

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number, verdict, detail in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"criterion {number}: {verdict} - {detail}")
