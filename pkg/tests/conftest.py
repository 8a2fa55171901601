import numpy as np
import pytest

from besov_singular import TruncatedMixedSpace


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def uniform_space(sizes, p, q, weights=None, js=None):
    js = range(len(sizes)) if js is None else js
    return TruncatedMixedSpace.uniform(js, sizes, p, q, weights)


_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::" in report.nodeid and (report.when == "call" or report.outcome != "passed"):
        name = report.nodeid.split("::")[-1]
        if report.when == "call" or name not in _ACCEPTANCE:
            _ACCEPTANCE[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_ACCEPTANCE):
        outcome = "PASS" if _ACCEPTANCE[name] == "passed" else "FAIL"
        terminalreporter.write_line(f"{outcome}  {name}")
