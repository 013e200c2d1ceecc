import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from excavtraj.soil import SoilParams, TerrainProfile
from oracles import default_model

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

SOFT = SoilParams(rho=1000.0, k_p=1.0, k_v=300.0, k_s=0.5)
HARD = SoilParams(rho=2500.0, k_p=3.0, k_v=1000.0, k_s=0.8)


@pytest.fixture(scope="session")
def model():
    return default_model()


@pytest.fixture(scope="session")
def flat():
    return TerrainProfile.flat()


@pytest.fixture(scope="session")
def soft():
    return SOFT


@pytest.fixture(scope="session")
def hard():
    return HARD


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
