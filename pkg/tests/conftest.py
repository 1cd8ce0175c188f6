import numpy as np
import pytest

from qkinlab.presets import random_model


@pytest.fixture
def rng():
    return np.random.default_rng(20260822)


@pytest.fixture
def model(rng):
    """Small well-conditioned two-level interaction model."""
    return random_model(rng, dim=2, epsilon=0.1)
