import math

import pytest

from src.config import Settings
from src.curve import circle_curve, ellipse_curve, fourier_curve

BUMP = 0.05


def bumpy_curve(eps=BUMP):
    """p = 1 + eps cos 4 alpha."""
    return fourier_curve(1.0, {4: eps})


@pytest.fixture(scope="session")
def circle():
    return circle_curve(1.0)


@pytest.fixture(scope="session")
def ellipse21():
    return ellipse_curve(2.0, 1.0)


@pytest.fixture(scope="session")
def ellipse21_rotated():
    return ellipse_curve(2.0, 1.0, rotation=math.pi / 6)


@pytest.fixture(scope="session")
def bumpy():
    return bumpy_curve()


@pytest.fixture
def settings():
    return Settings()
