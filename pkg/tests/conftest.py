import pytest

# (criterion id, passed, detail) in the order recorded by tests/test_acceptance.py
CRITERIA: list = []


@pytest.fixture
def criterion():
    def record(cid: str, passed: bool, detail: str = ""):
        CRITERIA.append((cid, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, passed, detail in CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {cid}: {detail}")
