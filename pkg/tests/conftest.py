import pytest

from erasurelab.channel import AdditiveChannel
from erasurelab.probmodel import NoiseDistribution


@pytest.fixture
def bsc09():
    return AdditiveChannel(NoiseDistribution((0.9, 0.1)))


@pytest.fixture
def ch64():
    return AdditiveChannel(NoiseDistribution((0.6, 0.4)))
