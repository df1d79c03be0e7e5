import numpy as np
import pytest

from freetransport.graph import bundled_graph, perron


@pytest.fixture(scope="session")
def pds():
    return {name: perron(bundled_graph(name)) for name in ("A2", "A3", "A4", "A5", "D4")}


@pytest.fixture(scope="session")
def a2(pds):
    return pds["A2"]


@pytest.fixture(scope="session")
def a3(pds):
    return pds["A3"]


@pytest.fixture(scope="session")
def a4(pds):
    return pds["A4"]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


acceptance_key = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    return request.config.stash.setdefault(acceptance_key, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(acceptance_key, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
