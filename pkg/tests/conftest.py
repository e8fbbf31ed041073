import pathlib
import re
import sys

import pytest

# tools/ scripts are importable in tests without being part of the package
TOOLS = pathlib.Path(__file__).resolve().parents[1] / "tools"
sys.path.insert(0, str(TOOLS))


ACCEPTANCE = "test_acceptance.py"
_notes = {}
_outcomes = {}


@pytest.fixture
def note(request):
    """Attach a one-line measurement to the acceptance summary of this test."""
    def add(text):
        _notes.setdefault(request.node.nodeid, []).append(text)
    return add


def pytest_runtest_logreport(report):
    if ACCEPTANCE in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        _outcomes[report.nodeid] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    by_criterion = {}
    for nodeid, outcome in _outcomes.items():
        name = nodeid.split("::")[-1]
        detail = "; ".join(_notes.get(nodeid, []))
        terminalreporter.write_line(f"  {outcome} {name}" + (f": {detail}" if detail else ""))
        match = re.match(r"test_criterion_(\d+)", name)
        if match:
            by_criterion.setdefault(int(match.group(1)), []).append(outcome)
    for n in sorted(by_criterion):
        results = by_criterion[n]
        verdict = "PASS" if all(r == "PASS" for r in results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {verdict} ({results.count('PASS')}/{len(results)} checks)")
