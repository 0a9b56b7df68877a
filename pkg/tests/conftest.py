import os
import sys

import mpmath
import pytest

HERE = os.path.dirname(__file__)
sys.path.insert(0, HERE)

ZEROS_2000 = os.path.join(HERE, "data", "zeros_2000.txt")


@pytest.fixture(autouse=True)
def _mp_precision():
    # oracles run at a fixed, generous precision; tests may raise it locally
    with mpmath.workdps(40):
        yield


@pytest.fixture(scope="session")
def zero_table():
    from analytic_pi import zeros
    return zeros.load_zeros(ZEROS_2000)


@pytest.fixture(scope="session")
def zeros_path():
    return ZEROS_2000
