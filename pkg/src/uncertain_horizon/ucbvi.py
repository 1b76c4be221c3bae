"""Optimistic layered value iteration under a general discount curve.

The agent keeps one Q-table per layer ``h = 1 .. N+1`` where ``N`` is the
effective horizon of the curve at tolerance ``delta``.  Layer ``h`` estimates
values under the shifted curve ``gamma(j + h - 1) / gamma(h)``; before every
episode all layers are refreshed by one backward sweep

    Q_h <- min(Q_h, r + gamma(h+1)/gamma(h) * P_hat V_{h+1} + bonus_h)

with the last layer pinned at ``delta / gamma(N+1)``.
"""
from __future__ import annotations

import json
import math

import numpy as np

from .discount import DiscountCurve, effective_horizon
from .horizon import HorizonDistribution
from .mdp import TabularMdp
from .planning import RegretTrace
from .runner import REALIZED, EpisodeSource, Scorer, run_episodes, split_rng

AS_DISPLAYED = "as_displayed"
SQRT_LOG = "sqrt_log"
BONUS_FORMS = (AS_DISPLAYED, SQRT_LOG)


class AgentState:
    """Q layers, visit counts and parameters of one generalized UCB-VI run.

    ``q[h-1]`` is the ``(S, A)`` table of layer ``h``.  With ``n_layers`` given,
    the effective horizon is taken as is instead of being derived from ``delta``.
    """

    def __init__(
        self,
        num_states: int,
        num_actions: int,
        curve: DiscountCurve,
        delta: float,
        confidence: float,
        T: int,
        *,
        n_layers: int | None = None,
        bonus_form: str = AS_DISPLAYED,
        bonus_scale: float = 1.0,
        update_unvisited: bool = False,
    ):
        if bonus_form not in BONUS_FORMS:
            raise ValueError(f"bonus_form must be one of {BONUS_FORMS}")
        if not 0 < confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if n_layers is None:
            if not 0 < delta < curve.total:
                raise ValueError(f"delta must lie in (0, Gamma(1) = {curve.total:g})")
            n_layers = effective_horizon(curve, delta).n_delta
        elif n_layers < 1 or delta < 0:
            raise ValueError("n_layers must be >= 1 and delta >= 0")
        # a finite-support curve caps the layers at its last positive index
        n_layers = int(min(n_layers, curve.support_end))

        self.S, self.A = int(num_states), int(num_actions)
        self.curve = curve
        self.delta = float(delta)
        self.confidence = float(confidence)
        self.T = int(T)
        self.n_layers = n_layers
        self.bonus_form = bonus_form
        self.bonus_scale = float(bonus_scale)
        self.update_unvisited = bool(update_unvisited)

        h = np.arange(1, n_layers + 2)
        self._gamma = np.atleast_1d(curve.gamma(h)).astype(float)
        self._tails = np.atleast_1d(curve.tail_sum(h)).astype(float)
        g_end = self._gamma[-1]
        self.terminal_value = self.delta / g_end if g_end > 0 else 0.0
        self.ratios = self._gamma[1:] / self._gamma[:-1]
        # 3 Gamma(h+1) / gamma(h) for h = 1..N
        self.bonus_coef = 3.0 * self._tails[1:] / self._gamma[:-1]

        self.q = np.empty((n_layers + 1, self.S, self.A))
        self.q[:n_layers] = (self._tails[:-1] / self._gamma[:-1])[:, None, None]
        self.q[n_layers] = self.terminal_value
        self.count_sa = np.zeros((self.S, self.A), dtype=np.int64)
        self.count_sas = np.zeros((self.S, self.A, self.S), dtype=np.int64)

    # ------------------------------------------------------------ internals
    @property
    def log_term(self) -> float:
        return math.log(self.S * self.A * max(self.T, 1) * self.n_layers / self.confidence)

    def empirical_kernel(self) -> np.ndarray:
        """``P_hat`` as an ``(S, A, S)`` array; uniform rows for unvisited pairs."""
        n = self.count_sa[..., None]
        return np.where(n > 0, self.count_sas / np.maximum(n, 1), 1.0 / self.S)

    def bonus_table(self, h: int) -> np.ndarray:
        """Exploration bonus for every ``(s, a)`` at layer ``h``; ``inf`` where unvisited."""
        n = self.count_sa.astype(float)
        visited = n > 0
        if self.update_unvisited:
            n = np.maximum(n, 1.0)
            visited = np.ones_like(visited)
        L = self.log_term
        n = np.maximum(n, 1.0)
        if self.bonus_form == AS_DISPLAYED:
            scale = L / np.sqrt(n)
        else:
            scale = np.sqrt(L / n)
        b = self.bonus_scale * self.bonus_coef[h - 1] * scale
        return np.where(visited, b, np.inf)

    # ------------------------------------------------------------ algorithm
    def update_q_values(self, reward: np.ndarray) -> None:
        p_hat = self.empirical_kernel()
        v = np.full(self.S, self.terminal_value)
        for h in range(self.n_layers, 0, -1):
            b = self.bonus_table(h)
            skip = np.isinf(b)
            target = reward + self.ratios[h - 1] * (p_hat @ v) + np.where(skip, 0.0, b)
            target[skip] = np.inf
            np.minimum(self.q[h - 1], target, out=self.q[h - 1])
            v = self.q[h - 1].max(axis=1)

    def values(self, h: int) -> np.ndarray:
        return self.q[h - 1].max(axis=1)

    def act(self, h: int, state: int) -> int:
        layer = min(h, self.n_layers)
        return int(np.argmax(self.q[layer - 1, state]))

    def observe(self, h: int, state: int, action: int, next_state: int) -> None:
        if h > self.n_layers:
            return
        self.count_sa[state, action] += 1
        self.count_sas[state, action, next_state] += 1

    def policy_tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Greedy action per layer; the tail repeats the last learned layer."""
        actions = np.argmax(self.q[: self.n_layers], axis=2)
        return actions, actions[-1]

    # ---------------------------------------------------------- checkpoints
    def to_dict(self) -> dict:
        return {
            "params": {
                "num_states": self.S,
                "num_actions": self.A,
                "curve": self.curve.to_dict(),
                "delta": self.delta,
                "confidence": self.confidence,
                "T": self.T,
                "n_layers": self.n_layers,
                "bonus_form": self.bonus_form,
                "bonus_scale": self.bonus_scale,
                "update_unvisited": self.update_unvisited,
            },
            "q": self.q.tolist(),
            "count_sa": self.count_sa.tolist(),
            "count_sas": self.count_sas.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "AgentState":
        p = dict(data["params"])
        curve = DiscountCurve.from_dict(p.pop("curve"))
        agent = cls(p.pop("num_states"), p.pop("num_actions"), curve, p.pop("delta"), p.pop("confidence"), p.pop("T"), **p)
        agent.q = np.asarray(data["q"], dtype=float)
        agent.count_sa = np.asarray(data["count_sa"], dtype=np.int64)
        agent.count_sas = np.asarray(data["count_sas"], dtype=np.int64)
        return agent

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "AgentState":
        return cls.from_dict(json.loads(text))


class GeneralizedLearner:
    """Adapter running an ``AgentState`` inside the shared episode loop."""

    def __init__(self, agent: AgentState, reward: np.ndarray):
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


# functional surface ---------------------------------------------------------
def init_agent(mdp_dims: tuple[int, int], curve: DiscountCurve, delta: float, confidence: float, T: int, **opts) -> AgentState:
    S, A = mdp_dims
    return AgentState(S, A, curve, delta, confidence, T, **opts)


def empirical_kernel(agent: AgentState, s: int, a: int) -> np.ndarray:
    n = agent.count_sa[s, a]
    if n == 0:
        return np.full(agent.S, 1.0 / agent.S)
    return agent.count_sas[s, a] / n


def bonus(agent: AgentState, h: int, s: int, a: int) -> float:
    """Bonus at ``(h, s, a)``; ``inf`` for an unvisited pair signals a skipped update."""
    return float(agent.bonus_table(h)[s, a])


def update_q_values(agent: AgentState, rewards: np.ndarray) -> None:
    agent.update_q_values(rewards)


def act(agent: AgentState, h: int, s: int) -> int:
    return agent.act(h, s)


def observe(agent: AgentState, h: int, s: int, a: int, s_next: int) -> None:
    agent.observe(h, s, a, s_next)


def run_learner(
    mdp: TabularMdp,
    dist: HorizonDistribution,
    curve: DiscountCurve,
    delta: float,
    confidence: float,
    T: int,
    rng,
    *,
    start_states=0,
    regret_mode: str = REALIZED,
    agent: AgentState | None = None,
    **agent_opts,
) -> tuple[RegretTrace, AgentState]:
    """Run the generalized learner for ``T`` episodes with lengths drawn from ``dist``.

    ``curve`` is what the learner plans with; ``dist`` generates the episodes.
    Regret is scored against ``dist``'s own survival curve in discounted mode.
    """
    if agent is None:
        agent = AgentState(mdp.num_states, mdp.num_actions, curve, delta, confidence, T, **agent_opts)
    src_rng, dyn_rng = split_rng(rng)
    source = EpisodeSource(dist, start_states, src_rng)
    scorer = Scorer(mdp, regret_mode, dist.curve)
    trace = run_episodes(mdp, GeneralizedLearner(agent, mdp.reward), source, dyn_rng, T, scorer)
    return trace, agent
