import numpy as np
import pytest

from stochdr.noise import NoiseSpec, sample_path, zero_path
from stochdr.operators import QuasilinearOperator, shift_operator
from stochdr.spaces import GelfandTriple, build_grid


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid32():
    return build_grid(32)


@pytest.fixture
def std32(grid32):
    return GelfandTriple(grid32, "standard")


@pytest.fixture
def por32(grid32):
    return GelfandTriple(grid32, "porous")


@pytest.fixture
def noisy_path(grid32):
    return sample_path(NoiseSpec(8, 0.2, 2.0, seed=3), grid32, 50, 0.5)


@pytest.fixture
def quiet_path(grid32):
    return zero_path(grid32, 50, 0.5)


@pytest.fixture
def quasi_shifted(grid32, noisy_path):
    return shift_operator(QuasilinearOperator(grid32), noisy_path.nu, 0.0, noisy_path.T)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for k in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[k])
