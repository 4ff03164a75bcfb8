import numpy as np
import pytest

from ctp_akkt.alm import solve
from ctp_akkt.problems import build

_ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    if rep.when == "setup" and rep.passed:
        return
    number, title = marker.args
    verdict = "PASS" if rep.passed else "FAIL"
    _ACCEPTANCE_LINES.append(f"{verdict} criterion {number}: {title}")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
        terminalreporter.write_line(line)


# ---------------------------------------------------------------- cached runs


@pytest.fixture(scope="session")
def tracking_trace():
    return solve(build("tracking"))


@pytest.fixture(scope="session")
def example2_trace():
    return solve(build("example2"))
