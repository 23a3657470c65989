import numpy as np
import pytest

from irsradar.channel import ChannelStructure, build_C, draw_reflectivities
from irsradar.optimizer import DesignProblem


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)


def random_hpd(rng, n, floor=0.1):
    G = crandn(rng, n, n)
    return G @ G.conj().T + floor * np.eye(n)


def random_problem(rng, L=3, M=2, Nm=4, N=12) -> DesignProblem:
    """Random rank-one factors, reflectivities, Doppler matrix and noise covariance."""
    S = np.empty((L, M, Nm, Nm), dtype=complex)
    for l in range(L):
        for m in range(M):
            S[l, m] = np.outer(np.exp(1j * rng.uniform(0, 2 * np.pi, Nm)), np.exp(1j * rng.uniform(0, 2 * np.pi, Nm)))
    channel = ChannelStructure(S=S, C=build_C(L, M), alpha=draw_reflectivities(rng, L, M))
    return DesignProblem(channel, crandn(rng, L * M, N), random_hpd(rng, L))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
