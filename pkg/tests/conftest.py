import pytest

# (criterion number, PASS/FAIL, description) filled in by test_acceptance.py
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n, status, text in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(f"[{status}] criterion {n:2d}: {text}")


@pytest.fixture
def record_criterion():
    def record(n, passed, text):
        line = (n, "PASS" if passed else "FAIL", text)
        ACCEPTANCE_LINES.append(line)
        print(f"[{line[1]}] criterion {n:2d}: {text}")
        return passed
    return record
