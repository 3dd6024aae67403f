import numpy as np
import pytest

from carleman_jump.coefficients import CoefficientPair, ComplexSymmetricMatrix
from carleman_jump.weights import WeightParameters


def iso(c, n=2, gamma=0.0):
    return ComplexSymmetricMatrix(c * np.eye(n), c * np.eye(n), gamma)


@pytest.fixture
def equal_pair():
    return CoefficientPair(iso(1.0), iso(1.0))


@pytest.fixture
def jump_pair():
    """a+ = 2I, a- = I with gamma = 0.1, the reference isotropic jump."""
    return CoefficientPair(iso(2.0, gamma=0.1), iso(1.0, gamma=0.1))


@pytest.fixture
def jump_weights():
    return WeightParameters(2.0, 1.0, 1.0, 0.5, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
