import numpy as np
import pytest

from uncertain_horizon.envs import build_random
from uncertain_horizon.horizon import HorizonDistribution
from uncertain_horizon.mdp import TabularMdp


def random_mdp(seed, S=None, A=None, max_S=4, max_A=3):
    rng = np.random.default_rng(seed)
    S = S or int(rng.integers(1, max_S + 1))
    A = A or int(rng.integers(1, max_A + 1))
    return build_random(S, A, 0.3, rng)


def random_finite_dist(rng, max_len=6):
    K = int(rng.integers(1, max_len + 1))
    pmf = rng.random(K) + 0.05
    return HorizonDistribution.from_pmf(pmf / pmf.sum())


def random_policy(rng, S, A, L):
    """Randomized nonstationary policy with ``L`` layers and a random tail."""
    from uncertain_horizon.planning import NonStationaryPolicy

    w = rng.random((L + 1, S, A)) + 1e-3
    w /= w.sum(axis=2, keepdims=True)
    return NonStationaryPolicy(w[:L], w[L])


@pytest.fixture
def two_state_chain():
    """State 0 -> 1 deterministically; only state 1 pays."""
    P = np.zeros((2, 2, 2))
    P[:, :, 1] = 1.0
    R = np.array([[0.0, 0.0], [1.0, 1.0]])
    return TabularMdp(P, R)


@pytest.fixture
def one_state():
    return TabularMdp(np.ones((1, 1, 1)), [[1.0]])


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for num in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[num])
