import numpy as np
import pytest

from hclab import ToleranceConfig, aq_operator, shift_plus_rank_one, weighted_shift


@pytest.fixture
def cfg():
    return ToleranceConfig()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


def random_weights(rng, n):
    """Nonzero weights bounded away from zero, with generic phases."""
    return rng.uniform(0.6, 1.4, n) * np.exp(2j * np.pi * rng.uniform(size=n))


def random_unitary(rng, n):
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


@pytest.fixture
def shift32(rng):
    return weighted_shift(random_weights(rng, 31), 32)


@pytest.fixture
def sro32(rng):
    return shift_plus_rank_one(random_weights(rng, 31), 0.3 + 0.4j, 2, 32)


@pytest.fixture
def hardy24():
    return shift_plus_rank_one([0.5] * 23, 1.0, 0, 24)


@pytest.fixture
def aq48():
    return aq_operator(0.5, 5.0, 48)
