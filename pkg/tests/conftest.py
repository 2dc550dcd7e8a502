import os
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from hoare2ri.solver import Solver
from hoare2ri.whilelang import parse_program

ROOT = Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"

settings.register_profile("ci", derandomize=True, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "ci"))


def load(name: str):
    return parse_program((FIXTURES / name).read_text())


@pytest.fixture(scope="session")
def solver():
    s = Solver()
    yield s
    s.close()


@pytest.fixture(scope="session")
def builtin_solver():
    return Solver(external=False)


@pytest.fixture
def t_sum():
    return load("sum.whl")


@pytest.fixture
def p_sum():
    return load("psum.whl")


# acceptance criteria report their outcome here; printed at the end of the run
ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_runtest_logreport(report):
    crit = getattr(report, "acceptance", None)
    if crit is None or report.when != "call":
        return
    ACCEPTANCE[crit[0]] = ("PASS" if report.passed else "FAIL", crit[1])


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        outcome.get_result().acceptance = mark.args


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    from hoare2ri.solver import STATS
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        verdict, title = ACCEPTANCE[n]
        terminalreporter.write_line(f"{verdict} {n:2d} {title}")
    terminalreporter.write_line(f"unconfirmed solver models over the whole run: {STATS['models_unconfirmed']}")
