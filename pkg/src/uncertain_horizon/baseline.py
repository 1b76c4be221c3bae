"""Fixed-horizon UCB-VI baselines (Hoeffding and Bernstein-Freedman bonuses).

The baseline plans for an assumed horizon ``H`` with undiscounted backward
induction over ``H`` layers.  Episodes still run for their true sampled length;
beyond step ``H`` the last layer's greedy action is repeated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .horizon import HorizonDistribution
from .mdp import TabularMdp
from .planning import RegretTrace
from .runner import REALIZED, EpisodeSource, Scorer, run_episodes, split_rng

HOEFFDING = "hoeffding"
BERNSTEIN = "bernstein"


@dataclass(frozen=True)
class BaselineConfig:
    """Baseline settings.

    The Bernstein constants follow the original UCB-VI-BF bonus
    ``sqrt(c_var L Var / N) + c_lin H L / N + sqrt(c_corr E_P[min(c_cap H^3 S^2 A L^2 / N'(y), H^2)] / N)``;
    they are defaults, not values taken from any experiment.
    """

    assumed_H: int
    bonus_kind: str = HOEFFDING
    confidence: float = 0.1
    bonus_scale: float = 1.0
    hoeffding_c: float = 7.0
    bernstein_c_var: float = 8.0
    bernstein_c_lin: float = 14.0 / 3.0
    bernstein_c_corr: float = 8.0
    bernstein_c_cap: float = 1.0e4

    def __post_init__(self):
        if self.assumed_H < 1:
            raise ValueError("assumed_H must be >= 1")
        if self.bonus_kind not in (HOEFFDING, BERNSTEIN):
            raise ValueError(f"bonus_kind must be {HOEFFDING!r} or {BERNSTEIN!r}")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")


class BaselineAgent:
    """Episodic UCB-VI with ``q[h-1]`` capped at ``H - h + 1``."""

    def __init__(self, num_states: int, num_actions: int, cfg: BaselineConfig, T: int):
        self.S, self.A, self.cfg, self.T = num_states, num_actions, cfg, int(T)
        H = cfg.assumed_H
        self.caps = (H - np.arange(H)).astype(float)
        self.q = np.broadcast_to(self.caps[:, None, None], (H, num_states, num_actions)).copy()
        self.count_sa = np.zeros((num_states, num_actions), dtype=np.int64)
        self.count_sas = np.zeros((num_states, num_actions, num_states), dtype=np.int64)
        # visits to each state at each step, used by the Bernstein correction term
        self.count_step = np.zeros((H + 1, num_states), dtype=np.int64)

    @property
    def log_term(self) -> float:
        return math.log(5.0 * self.S * self.A * max(self.T, 1) / self.cfg.confidence)

    def empirical_kernel(self) -> np.ndarray:
        n = self.count_sa[..., None]
        return np.where(n > 0, self.count_sas / np.maximum(n, 1), 1.0 / self.S)

    def bonus_table(self, h: int, p_hat: np.ndarray, v_next: np.ndarray) -> np.ndarray:
        cfg, H, L = self.cfg, self.cfg.assumed_H, self.log_term
        n = np.maximum(self.count_sa, 1).astype(float)
        if cfg.bonus_kind == HOEFFDING:
            b = cfg.hoeffding_c * H * np.sqrt(L / n)
        else:
            mean = p_hat @ v_next
            var = np.maximum(p_hat @ (v_next**2) - mean**2, 0.0)
            visits = np.maximum(self.count_step[h], 1).astype(float)
            corr = np.minimum(cfg.bernstein_c_cap * H**3 * self.S**2 * self.A * L**2 / visits, H**2)
            b = (
                np.sqrt(cfg.bernstein_c_var * L * var / n)
                + cfg.bernstein_c_lin * H * L / n
                + np.sqrt(cfg.bernstein_c_corr * (p_hat @ corr) / n)
            )
        return cfg.bonus_scale * b

    def update_q_values(self, reward: np.ndarray) -> None:
        H = self.cfg.assumed_H
        p_hat = self.empirical_kernel()
        visited = self.count_sa > 0
        v = np.zeros(self.S)
        for h in range(H, 0, -1):
            target = reward + p_hat @ v + self.bonus_table(h, p_hat, v)
            target = np.minimum(target, self.caps[h - 1])
            self.q[h - 1] = np.where(visited, np.minimum(self.q[h - 1], target), self.q[h - 1])
            v = self.q[h - 1].max(axis=1)

    def act(self, h: int, state: int) -> int:
        layer = min(h, self.cfg.assumed_H)
        return int(np.argmax(self.q[layer - 1, state]))

    def observe(self, h: int, state: int, action: int, next_state: int) -> None:
        if h > self.cfg.assumed_H:
            return
        self.count_sa[state, action] += 1
        self.count_sas[state, action, next_state] += 1
        self.count_step[h, next_state] += 1

    def policy_tables(self) -> tuple[np.ndarray, np.ndarray]:
        actions = np.argmax(self.q, axis=2)
        return actions, actions[-1]


class BaselineLearner:
    def __init__(self, agent: BaselineAgent, reward: np.ndarray):
        self.agent = agent
        self.reward = reward

    def begin_episode(self):
        self.agent.update_q_values(self.reward)

    def policy_tables(self):
        return self.agent.policy_tables()

    def act(self, h, state):
        return self.agent.act(h, state)

    def observe(self, h, state, action, next_state):
        self.agent.observe(h, state, action, next_state)


def run_baseline(
    mdp: TabularMdp,
    dist: HorizonDistribution,
    cfg: BaselineConfig,
    T: int,
    rng,
    *,
    start_states=0,
    regret_mode: str = REALIZED,
) -> RegretTrace:
    agent = BaselineAgent(mdp.num_states, mdp.num_actions, cfg, T)
    src_rng, dyn_rng = split_rng(rng)
    source = EpisodeSource(dist, start_states, src_rng)
    scorer = Scorer(mdp, regret_mode, dist.curve)
    return run_episodes(mdp, BaselineLearner(agent, mdp.reward), source, dyn_rng, T, scorer)
