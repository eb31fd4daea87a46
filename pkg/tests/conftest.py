import os
import sys

sys.path.insert(0, os.path.dirname(__file__))

import acceptance_log  # noqa: E402

_outcomes = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    if report.when == "call" or report.outcome == "failed":
        _outcomes.setdefault(name, report.outcome)
        if report.outcome == "failed":
            _outcomes[name] = "failed"


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_outcomes):
        title, detail = acceptance_log.DETAILS.get(name, (name, ""))
        verdict = "PASS" if _outcomes[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{verdict}  {title}  {detail}".rstrip())
