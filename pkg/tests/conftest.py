import pytest

_ACCEPTANCE: dict = {}


@pytest.fixture
def report_line():
    """Record one acceptance line; all lines are printed in the terminal summary."""

    def record(number: int, title: str, ok: bool, detail: str):
        line = f"criterion {number:2d} [{'PASS' if ok else 'FAIL'}] {title}: {detail}"
        _ACCEPTANCE[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[number])
