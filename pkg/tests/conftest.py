import numpy as np
import pytest

from hermitelab.moving_average import parse_kernel
from hermitelab.special_math import derive_params


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def exp_kernel():
    return parse_kernel("exp:theta=1")


@pytest.fixture
def p_q2():
    return derive_params(2, 0.7)


@pytest.fixture
def p_q1():
    return derive_params(1, 0.8)


# acceptance criteria record one line each; printed after the run
ACCEPTANCE_LOG: dict[int, tuple[str, str, float]] = {}


@pytest.fixture
def acceptance_log():
    return ACCEPTANCE_LOG


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LOG:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LOG):
        status, detail, seconds = ACCEPTANCE_LOG[k]
        terminalreporter.write_line(f"criterion {k}: {status}  ({seconds:.1f} s)  {detail}")
