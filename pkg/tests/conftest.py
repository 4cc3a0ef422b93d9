import numpy as np
import pytest

from lftrecover.experiment import build_example_plant, build_xi_designs
from lftrecover.interpolation import compute_rtim

TRUE_THETA = np.array([0.1, 5.0])


@pytest.fixture(scope="session")
def example_plant():
    return build_example_plant()


@pytest.fixture(scope="session")
def designs():
    return build_xi_designs(-0.05, (4.4799, 4.4179, 4.5306))


@pytest.fixture(scope="session")
def exact_gammas(example_plant, designs):
    return {k: compute_rtim(example_plant, TRUE_THETA, s).gamma for k, s in designs.items()}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if config.acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(config.acceptance_lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
