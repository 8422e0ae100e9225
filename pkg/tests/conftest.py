import math
import re

import pytest

from hetnet.hata import single_tier_network, two_tier_network
from hetnet.model import Constant, NetworkModel, TierSpec


@pytest.fixture(scope="session")
def two_tier():
    return two_tier_network()


@pytest.fixture(scope="session")
def two_tier_shadowed():
    return two_tier_network(5.0)


@pytest.fixture(scope="session")
def single_tier():
    return single_tier_network()


def simple_tier(lam=1.0, beta=4.0, threshold=1.0, **kw):
    return TierSpec(lam, beta=Constant(beta), threshold=Constant(threshold), **kw)


@pytest.fixture
def unit_beta4():
    return NetworkModel((simple_tier(),))


def rel(a, b):
    return abs(a - b) / max(abs(a), abs(b), math.ulp(1.0))


# one PASS/FAIL line per acceptance criterion, aggregated over its tests
_CRITERION = re.compile(r"test_acceptance\.py::test_c(\d+)_")
_criteria: dict[int, bool] = {}


def pytest_runtest_logreport(report):
    m = _CRITERION.search(report.nodeid)
    if m is None or (report.when != "call" and not report.failed):
        return
    key = int(m.group(1))
    _criteria[key] = _criteria.get(key, True) and not report.failed


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria):
        terminalreporter.write_line(f"criterion {key}: {'PASS' if _criteria[key] else 'FAIL'}")
