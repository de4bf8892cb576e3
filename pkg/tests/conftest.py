import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from csf3d.geometry import DiscreteCurve

settings.register_profile("default", deadline=None, max_examples=40, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make(func, n=128):
    return DiscreteCurve.from_function(func, n)


def circle_fn(r=1.0, c=(0.0, 0.0, 0.0)):
    return lambda x: (c[0] + r * np.cos(x), c[1] + r * np.sin(x), c[2] + 0.0 * x)


def twisted_fn(eps=0.1):
    return lambda x: (np.cos(x), np.sin(x), eps * np.sin(2 * x))


@pytest.fixture
def unit_circle():
    return make(circle_fn())


@pytest.fixture
def twisted():
    return make(twisted_fn())
