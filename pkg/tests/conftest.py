import math

import pytest
from hypothesis import HealthCheck, settings

from ramanpairs.model import RamanParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

SQRT3 = math.sqrt(3.0)
A1_EPS4 = math.pi / SQRT3


@pytest.fixture
def balanced4():
    return RamanParams(epsilon=4.0, pump_amp=A1_EPS4)
