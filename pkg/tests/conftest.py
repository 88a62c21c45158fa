import pytest

from anoma_feedback import ChannelDistribution, SystemParams, uniform_codebook


@pytest.fixture
def params():
    """Reference operating point: P = 10 with a half-symbol offset."""
    return SystemParams(10.0, 0.5)


@pytest.fixture
def sync_params():
    return SystemParams(10.0, 0.0)


@pytest.fixture
def dist1():
    return ChannelDistribution(0.5)


@pytest.fixture
def dist2():
    return ChannelDistribution(1.0)


@pytest.fixture
def codebooks(dist1, dist2):
    return uniform_codebook(dist1, 3), uniform_codebook(dist2, 3)
