import numpy as np
import pytest

from coneflow import IntegratorSettings, ManifoldConfig, PhasePoint
from coneflow.manifolds import chart_to_phase, random_launch

SQ2 = np.sqrt(2.0)


@pytest.fixture
def circle():
    return ManifoldConfig.circle(1.0)


@pytest.fixture
def torus():
    return ManifoldConfig.torus(2.0, 0.5)


@pytest.fixture
def settings():
    return IntegratorSettings(rtol=1e-10, atol=1e-12)


@pytest.fixture
def round_launch():
    """Unit-speed launch perpendicular to the generatrix on the cone over the unit circle."""
    return PhasePoint([1.0, 0.0, 1.0], [0.0, 1.0, 0.0])


def random_states(cfg, seed, count, t_range=(0.5, 2.0)):
    rng = np.random.default_rng(seed)
    return [chart_to_phase(cfg, *random_launch(cfg, rng, t_range)) for _ in range(count)]
