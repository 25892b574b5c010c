import numpy as np
import pytest

from symtrack.mech import submarine


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def sub_sym():
    """Submarine with J1 = J2 and M1 = M2 (exact)."""
    return submarine((1, 1, 3), (2, 2, 6))


@pytest.fixture
def sub_asym():
    """Submarine with M1 != M2 (exact)."""
    return submarine((1, 1, 1), (4, 5, 6))
