from __future__ import annotations

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# criterion number -> {"title", "outcome", "duration"}
_criteria: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    report = (yield).get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "outcome": "PASS", "duration": 0.0})
    entry["duration"] += report.duration
    if report.failed:
        entry["outcome"] = "FAIL"
    elif report.skipped and entry["outcome"] == "PASS":
        entry["outcome"] = "SKIP"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        terminalreporter.write_line(
            f"criterion {number:>2}: {e['outcome']}  ({e['duration']:6.1f}s)  {e['title']}")
