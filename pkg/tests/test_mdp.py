import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uncertain_horizon.mdp import MdpError, TabularMdp, run_episode, step

from conftest import random_mdp


def terminal_chain():
    # state 1 is terminal and absorbing
    P = np.zeros((2, 1, 2))
    P[0, 0, 1] = 1.0
    P[1, 0, 1] = 1.0
    return TabularMdp(P, [[0.5], [0.0]], [False, True])


class TestTabularMdp:
    def test_rejects_bad_rows(self):
        P = np.full((2, 1, 2), 0.6)
        with pytest.raises(MdpError):
            TabularMdp(P, np.zeros((2, 1)))

    def test_rejects_negative_entries(self):
        P = np.array([[[1.5, -0.5]], [[0.0, 1.0]]])
        with pytest.raises(MdpError):
            TabularMdp(P, np.zeros((2, 1)))

    def test_rejects_rewards_outside_unit_interval(self):
        with pytest.raises(MdpError):
            TabularMdp(np.ones((1, 1, 1)), [[1.5]])

    def test_terminal_must_self_loop_with_zero_reward(self):
        P = np.zeros((2, 1, 2))
        P[:, 0, 0] = 1.0
        with pytest.raises(MdpError):
            TabularMdp(P, np.zeros((2, 1)), [False, True])
        with pytest.raises(MdpError):
            TabularMdp(P, [[0.3], [0.0]], [True, False])

    def test_is_immutable(self):
        m = terminal_chain()
        with pytest.raises(ValueError):
            m.transition[0, 0, 0] = 1.0

    def test_json_round_trip(self):
        m = random_mdp(3, S=3, A=2)
        data = json.loads(m.to_json())
        assert set(data) == {"num_states", "num_actions", "transition", "reward", "terminal"}
        back = TabularMdp.from_json(m.to_json())
        np.testing.assert_array_equal(back.transition, m.transition)
        np.testing.assert_array_equal(back.reward, m.reward)
        np.testing.assert_array_equal(back.terminal, m.terminal)

    def test_from_dict_checks_declared_sizes(self):
        data = random_mdp(1, S=2, A=2).to_dict()
        data["num_states"] = 3
        with pytest.raises(MdpError):
            TabularMdp.from_dict(data)


class TestStep:
    def test_single_state(self, one_state):
        assert step(one_state, 0, 0, np.random.default_rng(0)) == (0, 1.0)

    def test_point_mass_row(self, two_state_chain):
        assert step(two_state_chain, 0, 0, np.random.default_rng(0)) == (1, 0.0)

    def test_out_of_range(self, one_state):
        rng = np.random.default_rng(0)
        with pytest.raises(IndexError):
            step(one_state, 1, 0, rng)
        with pytest.raises(IndexError):
            step(one_state, 0, 1, rng)

    def test_empirical_frequency(self):
        P = np.array([[[0.3, 0.7]], [[0.3, 0.7]]])
        m = TabularMdp(P, np.zeros((2, 1)))
        rng = np.random.default_rng(12345)
        hits = sum(step(m, 0, 0, rng)[0] for _ in range(100_000))
        assert abs(hits / 100_000 - 0.7) <= 0.01

    def test_never_samples_zero_probability_successor(self):
        P = np.array([[[0.5, 0.5, 0.0]]] * 3)
        m = TabularMdp(P, np.zeros((3, 1)))
        rng = np.random.default_rng(1)
        assert all(step(m, 0, 0, rng)[0] != 2 for _ in range(2000))


class TestRunEpisode:
    def test_total_reward_single_state(self, one_state):
        rec = run_episode(one_state, lambda h, s: 0, 0, 3, np.random.default_rng(0))
        assert rec.total_reward == 3.0
        assert len(rec.trajectory) == 3

    def test_start_at_terminal(self):
        rec = run_episode(terminal_chain(), lambda h, s: 0, 1, 4, np.random.default_rng(0))
        assert rec.trajectory == []

    def test_stops_on_entering_terminal(self):
        rec = run_episode(terminal_chain(), lambda h, s: 0, 0, 5, np.random.default_rng(0))
        assert len(rec.trajectory) == 1
        assert rec.trajectory[0].next_state == 1

    def test_invalid_action(self, one_state):
        with pytest.raises(IndexError):
            run_episode(one_state, lambda h, s: 3, 0, 2, np.random.default_rng(0))

    def test_horizon_must_be_positive(self, one_state):
        with pytest.raises(ValueError):
            run_episode(one_state, lambda h, s: 0, 0, 0, np.random.default_rng(0))

    def test_on_step_sees_every_transition(self, two_state_chain):
        seen = []
        rec = run_episode(two_state_chain, lambda h, s: 1, 0, 4, np.random.default_rng(0),
                          on_step=lambda h, tr: seen.append((h, tr)))
        assert [h for h, _ in seen] == [1, 2, 3, 4]
        assert [tr for _, tr in seen] == rec.trajectory

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), horizon=st.integers(1, 30))
    def test_determinism_chaining_and_reward_bound(self, seed, horizon):
        m = random_mdp(seed)
        rng_pol = np.random.default_rng(seed)
        table = rng_pol.integers(m.num_actions, size=(horizon, m.num_states))

        def policy(h, s):
            return int(table[h - 1, s])

        a = run_episode(m, policy, 0, horizon, np.random.default_rng(seed))
        b = run_episode(m, policy, 0, horizon, np.random.default_rng(seed))
        assert a == b
        assert len(a.trajectory) <= a.drawn_length
        for prev, nxt in zip(a.trajectory, a.trajectory[1:]):
            assert prev.next_state == nxt.state
        assert a.total_reward <= a.drawn_length
