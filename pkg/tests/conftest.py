import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from dualgeo.fixtures import builtin
from dualgeo.geometry import Metric


@pytest.fixture(scope="session")
def euclid2():
    return Metric.from_sources([["1", "0"], ["0", "1"]])


@pytest.fixture(scope="session")
def sphere2():
    # round unit 2-sphere, polar chart (x1 = theta, x2 = phi)
    return Metric.from_sources([["1", "0"], ["0", "sin(x1)^2"]])


@pytest.fixture(scope="session")
def sw2():
    return builtin("sw2")


@pytest.fixture(scope="session")
def ho2():
    return builtin("ho2")


@pytest.fixture(scope="session")
def sw2_weak():
    return builtin("sw2-weak")


@pytest.fixture(scope="session")
def sw2_strong():
    return builtin("sw2-strong-synthetic")


@pytest.fixture(scope="session")
def sphere3():
    return builtin("sphere3-trivial")


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20250808)
