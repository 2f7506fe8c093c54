import numpy as np
import pytest

from bubblefield.geometry import make_ellipsoid, make_icosphere, scale_translate
from bubblefield.incident import IncidentPulse
from bubblefield.physics import MediumBubbleSpec, derive_constants
from bubblefield.potentials import shape_factors


@pytest.fixture(scope="session")
def sphere2():
    return make_icosphere(1.0, 2)


@pytest.fixture(scope="session")
def sphere3():
    return make_icosphere(1.0, 3)


@pytest.fixture(scope="session")
def sphere4():
    return make_icosphere(1.0, 4)


@pytest.fixture(scope="session")
def ellipsoid3():
    return make_ellipsoid((2.0, 1.0, 1.0), 3)


@pytest.fixture(scope="session")
def factors3(sphere3):
    return shape_factors(sphere3)


@pytest.fixture(scope="session")
def factors4(sphere4):
    return shape_factors(sphere4)


@pytest.fixture(scope="session")
def pulse():
    return IncidentPulse(T_p=1.0, amplitude=1.0, x0=(-5.0, 0.0, 0.0))


@pytest.fixture(scope="session")
def setup(sphere3, factors3):
    """Unit-material sphere bubble at delta = 1e-2 centred at the origin."""
    spec = MediumBubbleSpec(1.0, 1.0, 1e-2, 1.0, 1.0)
    C = derive_constants(spec, factors3)
    bubble = scale_translate(sphere3, spec.delta, spec.z)
    return spec, C, factors3, bubble


def rng(seed=0):
    return np.random.default_rng(seed)
