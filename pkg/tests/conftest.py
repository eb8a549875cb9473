import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "parts": []})
    if report.when == "call" or (report.when == "setup" and not report.passed):
        entry["parts"].append((item.name, report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        entry = _criteria[number]
        ok = all(outcome == "passed" for _, outcome in entry["parts"])
        failed = [name for name, outcome in entry["parts"] if outcome != "passed"]
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {entry['title']}"
        if failed:
            line += f"  (failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
