import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# Default profile for module tests; the acceptance suite switches to "thorough"
# for its high-volume property runs.
settings.register_profile(
    "dev", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile(
    "thorough", max_examples=1000, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("dev")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
