import pytest
from hypothesis import HealthCheck, settings

from metasir.model import NetworkParams, ReliabilityTarget

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def fig_params():
    return NetworkParams(density=1.0, path_loss_exponent=4.0, link_distance=0.5)


@pytest.fixture
def nu90():
    return ReliabilityTarget.from_nu(0.9)
