import pytest

# criterion number -> (passed, summary); filled by test_acceptance and echoed at the end
CRITERIA: dict = {}


@pytest.fixture
def record():
    def _record(number: int, passed: bool, summary: str):
        CRITERIA[number] = (passed, summary)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'} {summary}")
    return _record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        passed, summary = CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if passed else 'FAIL'} {summary}")
