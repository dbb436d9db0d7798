import itertools

import numpy as np
import pytest

from qport.data import MunicipalityTable, synthesize_table
from qport.qubo import DEFAULT_WEIGHTS


def all_portfolios(n, k=None):
    """Every 0/1 vector of length n (or only those of weight k), LSB = candidate 0."""
    if k is None:
        idx = np.arange(1 << n)
        return ((idx[:, None] >> np.arange(n)) & 1).astype(np.int8)
    rows = []
    for combo in itertools.combinations(range(n), k):
        x = np.zeros(n, dtype=np.int8)
        x[list(combo)] = 1
        rows.append(x)
    return np.array(rows)


def random_table(n, seed, synergy=True):
    rng = np.random.default_rng(seed)
    def sym(mask=None):
        u = np.triu(rng.random((n, n)), 1)
        m = u + u.T
        return m if synergy else np.zeros((n, n))
    adj = (sym() > 0.6).astype(float) if synergy else np.zeros((n, n))
    return MunicipalityTable.from_arrays([f"r{i}" for i in range(n)], rng.random(n), rng.random(n),
                                         rng.random(n), adj, sym(), sym())


@pytest.fixture(scope="session")
def calib():
    """The frozen n=20 calibration instance."""
    return synthesize_table(20, 42)


@pytest.fixture
def weights():
    return DEFAULT_WEIGHTS


_CRITERIA = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = getattr(report, "criterion", None)
    if marker is None:
        return
    number, title = marker
    status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[report.outcome]
    _CRITERIA[number] = (status, title)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    m = item.get_closest_marker("criterion")
    if m is not None:
        report.criterion = tuple(m.args)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        status, title = _CRITERIA[number]
        terminalreporter.write_line(f"criterion {number:>2}: {status}  {title}")
