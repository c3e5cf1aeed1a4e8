import re

import pytest

ACCEPTANCE = {}
_DETAIL = {}


@pytest.fixture
def record():
    """``record(criterion, passed, detail)`` stores a line for the acceptance summary."""
    def _record(criterion, passed, detail=""):
        prev = _DETAIL.get(criterion)
        ok = bool(passed) and (prev is None or prev[0])
        text = detail if prev is None else f"{prev[1]}; {detail}"
        _DETAIL[criterion] = (ok, text)
    return _record


def _criterion(nodeid):
    m = re.search(r"test_criterion_(\d+)", nodeid)
    return int(m.group(1)) if m else None


def pytest_runtest_logreport(report):
    c = _criterion(report.nodeid)
    if c is None or report.when != "call" and report.outcome == "passed":
        return
    ok = report.outcome == "passed"
    ACCEPTANCE[c] = ACCEPTANCE.get(c, True) and ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for c in sorted(ACCEPTANCE):
        ok = ACCEPTANCE[c] and _DETAIL.get(c, (True, ""))[0]
        detail = _DETAIL.get(c, (True, ""))[1]
        tr.write_line(f"criterion {c:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
