import numpy as np
import pytest

from hyperlab.eigenfields import sample_2B_family
from hyperlab.operators import make_scaled_backward_shift

import _acceptance_log


def pytest_terminal_summary(terminalreporter):
    if _acceptance_log.LINES:
        terminalreporter.write_sep("-", "acceptance criteria")
        for line in sorted(_acceptance_log.LINES):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def shift32():
    return make_scaled_backward_shift(2.0, 32)


@pytest.fixture(scope="session")
def family32():
    return sample_2B_family(2.0, 32, 64)


@pytest.fixture()
def rng():
    return np.random.default_rng(12345)
