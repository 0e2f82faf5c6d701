import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import beamshadow as bs

settings.register_profile(
    "ci",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ci")


@pytest.fixture(scope="session")
def coarse_grid():
    """5-degree grid: 36 x 72 directions, the default working resolution."""
    return bs.make_grid(5.0, 5.0)


@pytest.fixture(scope="session")
def free_field(coarse_grid):
    return bs.synth_freespace_field(bs.ArrayConfig(), coarse_grid)


@pytest.fixture(scope="session")
def blocked_field(coarse_grid, free_field):
    """Free field pushed through the tight one-finger grip scenario."""
    from beamshadow.experiment import default_scenarios

    spec = default_scenarios()["tight-grip-one-finger"]
    dist = bs.gen_distortion(spec, coarse_grid, free_field.n_antennas)
    return bs.apply_distortion(free_field, dist)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_field_vector(rng, n=4, allow_zero=False):
    """Random complex field vector; re-draws the rare all-zero outcome."""
    while True:
        v = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        if allow_zero or np.abs(v).max() > 1e-6:
            return v
