import pytest

# acceptance tests append (criterion, status, detail) here; printed at the end of the run
ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    def record(criterion, ok, detail):
        status = "SKIP" if ok is None else ("PASS" if bool(ok) else "FAIL")
        ACCEPTANCE_LINES.append(f"[acceptance {criterion}] {status}: {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]").split(".")[0])):
            terminalreporter.write_line(line)
