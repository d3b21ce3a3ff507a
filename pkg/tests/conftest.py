import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from memflow.cnf import encode_cnf
from memflow.netlist import build_multiplier


@pytest.fixture(scope="session")
def system_15():
    return encode_cnf(build_multiplier(2, 3), 15)


@pytest.fixture(scope="session")
def system_35():
    return encode_cnf(build_multiplier(3, 3), 35)


@pytest.fixture(scope="session")
def system_143():
    return encode_cnf(build_multiplier(4, 4), 143)
