from pathlib import Path

import numpy as np
import pytest

from vcselrng.sfm import integrate, paper_operating_point

DATA = Path(__file__).parent / "data"


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running (minutes)")
    config.addinivalue_line("markers", "acceptance(number, title): acceptance criterion")


@pytest.fixture(scope="session")
def op_trajectory_2us():
    """2 us of the operating point after the 200 ns warm-up (1 ps spacing)."""
    return integrate(paper_operating_point(), h=5e-5, t_end=2200.0, decimation=20,
                     warmup=200.0, seed=0)


@pytest.fixture(scope="session")
def short_trajectory():
    """60 ns of chaotic intensity, enough for small extraction checks."""
    return integrate(paper_operating_point(), h=5e-5, t_end=260.0, decimation=20,
                     warmup=200.0, seed=1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or rep.when != "call" and not rep.failed:
        return
    number, title = mark.args
    ok = rep.passed if rep.when == "call" else False
    prev = _ACCEPTANCE.get(number, (title, True))
    _ACCEPTANCE[number] = (title, prev[1] and ok)


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, ok = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
