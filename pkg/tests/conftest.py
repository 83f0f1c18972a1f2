import math

import pytest

from statransport import TrapConfig, TransportRequest

F0 = 7.16
OMEGA0 = 2 * math.pi * F0
D = 1.29e-3
TF = 0.186


@pytest.fixture
def cfg():
    return TrapConfig.from_axial_frequency(OMEGA0)


@pytest.fixture
def reference_request():
    return TransportRequest(D, TF, OMEGA0)
