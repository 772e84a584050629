import time

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    start = time.perf_counter()
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    passed = outcome.excinfo is None
    elapsed = time.perf_counter() - start
    prev = _CRITERIA.get(number)
    ok = passed and (prev is None or prev[1])
    _CRITERIA[number] = (title, ok, (prev[2] if prev else 0.0) + elapsed)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, ok, elapsed = _CRITERIA[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  ({elapsed:.2f} s)"
        )
