import pytest

from shadowpolicy.ml.approximator import Network

from .factories import make_network


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow tests"
    )


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return

    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def linear_net() -> Network:
    return make_network([[[1.0, 2.0], [3.0, 4.0]]])
