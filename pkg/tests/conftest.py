from fractions import Fraction

import pytest

from cpamm.econ import Oracle
from cpamm.state import AtomicLedger, State
from cpamm.txn import Create, apply_create

LP, TRADER = 0, 1


@pytest.fixture
def example_state() -> State:
    """Pool (token0: 18, token1: 6) created by account 0; account 1 holds no shares."""
    s = State(AtomicLedger({LP: {0: 100, 1: 100}, TRADER: {0: 50, 1: 50}}))
    return apply_create(s, Create(LP, 0, 1, 18, 6))


@pytest.fixture
def example_oracle() -> Oracle:
    return Oracle({0: 3, 1: 4})


ACCEPTANCE_RESULTS: dict = {}


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance.py" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    ACCEPTANCE_RESULTS[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(ACCEPTANCE_RESULTS.items()):
        terminalreporter.write_line(f"{outcome}  {name}")
