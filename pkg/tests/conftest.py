import pytest

from nbart.codec import ValuePayload
from nbart.scenario import Scenario
from nbart.topology import Params

ACCEPTANCE_LINES = []


@pytest.fixture
def small():
    return Scenario(Params(n_p=3, n_c=2, f_p=1, f_c=1, b=2), ValuePayload(bytes(range(64))))


@pytest.fixture
def medium():
    return Scenario(Params(n_p=5, n_c=4, f_p=1, f_c=1, b=2, nt_p=2, nt_c=2), ValuePayload(bytes(range(64))))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
