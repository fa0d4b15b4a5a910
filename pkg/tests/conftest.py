import pytest

from contractsos.contraction import find_metric
from contractsos.sysdef import data_path, parse_system


def bundled(name):
    return parse_system(data_path(name))


@pytest.fixture(scope="session")
def jet():
    return bundled("jet")


@pytest.fixture(scope="session")
def jet_cert(jet):
    return find_metric(jet, 4)


@pytest.fixture(scope="session")
def jet_additive():
    return bundled("jet_additive")


@pytest.fixture(scope="session")
def jet_additive_cert(jet_additive):
    return find_metric(jet_additive, 4)


@pytest.fixture(scope="session")
def driven():
    return bundled("vdp_driven")


@pytest.fixture(scope="session")
def semi_cert(driven):
    return find_metric(driven, 4, structure_vars=["y1"], semi=True, zero_entries=[(0, 1), (1, 1)])


# PASS/FAIL lines from the acceptance suite, replayed after the run so they
# show up even when output capture is on
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
