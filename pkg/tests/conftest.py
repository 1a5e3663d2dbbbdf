import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record one acceptance line; the summary is printed at the end of the run."""

    def record(number: int, title: str, ok: bool, detail: str, elapsed: float, budget: float):
        in_time = elapsed < budget
        status = "PASS" if ok and in_time else "FAIL"
        line = f"criterion {number:2d} {status}  {title}: {detail} [{elapsed:.2f}s / {budget:g}s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line
        assert in_time, line

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
