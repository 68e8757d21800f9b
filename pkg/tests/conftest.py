import pytest

_ACCEPTANCE = []


@pytest.fixture
def criterion():
    """Record a pass/fail line for an acceptance criterion, then assert it."""

    def check(name, ok, detail=""):
        _ACCEPTANCE.append("%s %s%s" % ("PASS" if ok else "FAIL", name, " -- " + detail if detail else ""))
        assert ok, "%s: %s" % (name, detail)

    return check


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
