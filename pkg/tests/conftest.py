import cmath
import functools
import math

import numpy as np
import pytest

from semispec import PolySymbol, parse_symbol

QUARTIC_TEXT = "xi^2 + (1+3i)*x^2 + x^4"
QUARTIC_DIRECTION = math.atan(3) / 2  # arg(1+3i)/2


def rotated_oscillator(alpha):
    return PolySymbol({(0, 2): 1, (2, 0): cmath.exp(1j * alpha)})


@pytest.fixture
def quartic():
    return parse_symbol(QUARTIC_TEXT)


@pytest.fixture
def rng():
    return np.random.default_rng(20061017)


@functools.lru_cache(maxsize=None)
def quartic_cloud(h, N=512):
    from semispec.pipeline import hermite_cloud

    return hermite_cloud(parse_symbol(QUARTIC_TEXT), h, N)[0]


@functools.lru_cache(maxsize=None)
def rotated_cloud(alpha, h=0.05, N=256):
    from semispec.pipeline import hermite_cloud

    return hermite_cloud(rotated_oscillator(alpha), h, N)[0]
