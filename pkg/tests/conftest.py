import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile("swlab", max_examples=40, deadline=None)
settings.load_profile("swlab")

ACCEPTANCE: dict[int, tuple[str, bool, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when != "call":
        return
    number, title = marker.args
    detail = getattr(item, "acceptance_detail", "")
    if rep.failed:
        detail = (detail + " | " if detail else "") + str(call.excinfo.value).splitlines()[0][:160]
    ACCEPTANCE[number] = (title, rep.passed, detail)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        title, passed, detail = ACCEPTANCE[number]
        line = f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {title}"
        tr.write_line(line + (f"  ({detail})" if detail else ""))
