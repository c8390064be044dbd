import re

import pytest

_LINES = []


@pytest.fixture
def criterion():
    """``criterion(num, title, ok, detail)`` records one PASS/FAIL line and
    returns `ok`."""
    def report(num, title, ok, detail=""):
        line = "%s  [%2d] %s: %s" % ("PASS" if ok else "FAIL", num, title, detail)
        _LINES.append(line)
        print(line)
        return ok
    return report


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda s: int(re.search(r"\[\s*(\d+)\]", s).group(1))
    for line in sorted(_LINES, key=key):
        terminalreporter.write_line(line)
