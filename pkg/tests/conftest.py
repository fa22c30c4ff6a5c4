import numpy as np
import pytest

from usris.beamforming import CascadeContext
from usris.channel import ChannelSet


def random_channels(rng, K, M, N, L):
    def cn(*shape):
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)

    return ChannelSet(tuple([cn(N, K)] + [cn(N, N) for _ in range(L - 1)]), cn(N, M))


def random_instance(rng, K=2, M=2, N=4, L=2, alpha=0.8, sparse=False, random_theta=True):
    """Complex-Gaussian channels with optional random activation and phases."""
    channels = random_channels(rng, K, M, N, L)
    z = np.ones((L, N))
    if sparse:
        # keep at least one element per layer so the cascade is not cut
        z = (rng.random((L, N)) < 0.6).astype(float)
        for l in range(L):
            if not z[l].any():
                z[l, rng.integers(N)] = 1.0
    theta = np.exp(2j * np.pi * rng.random((L, N))) if random_theta else None
    return CascadeContext(channels, z, alpha, theta)


def unit_vector(rng, n):
    x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    return x / np.linalg.norm(x)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
