"""Learning with an unknown episode-length distribution.

Episodes are split into doubling blocks ``B, 2B, 4B, ...``.  Before each block
the discount curve is re-estimated from every episode length seen so far, and
the generalized learner is restarted with the plug-in curve and the plug-in
tail ``Gamma_hat(H* + 1)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .discount import DiscountCurve
from .horizon import HorizonDistribution
from .mdp import TabularMdp
from .planning import RegretTrace
from .runner import REALIZED, EpisodeSource, Scorer, run_episodes, split_rng
from .ucbvi import AgentState, GeneralizedLearner


class EstimationError(ValueError):
    pass


@dataclass(frozen=True)
class BlockSchedule:
    B: int
    block_lengths: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.block_lengths)


def block_schedule(T: int, confidence: float) -> BlockSchedule:
    """``B = ceil(sqrt(T) ln T ln(ln(max(T, 3)) / confidence))`` clamped to ``[1, T]``."""
    if T < 1:
        raise ValueError("T must be >= 1")
    raw = math.sqrt(T) * math.log(T) * math.log(math.log(max(T, 3)) / confidence)
    B = int(min(max(math.ceil(raw), 1), T))
    lengths = []
    left, size = T, B
    while left > 0:
        lengths.append(min(size, left))
        left -= lengths[-1]
        size *= 2
    return BlockSchedule(B, tuple(lengths))


class EmpiricalSurvival:
    """Exact-count empirical distribution of observed episode lengths."""

    def __init__(self, samples):
        obs = np.sort(np.asarray(samples, dtype=np.int64))
        if obs.size == 0:
            raise EstimationError("need at least one observed episode length")
        if obs[0] < 1:
            raise EstimationError("episode lengths must be >= 1")
        self.observed_lengths = obs
        self.n = int(obs.size)
        self.max_length = int(obs[-1])
        # at_least[h-1] = #{i : H_i >= h} for h = 1 .. max_length
        h = np.arange(1, self.max_length + 1)
        self._at_least = self.n - np.searchsorted(obs, h, side="left")

    def ecdf(self, h: int) -> float:
        """``F_hat(h) = #{H_i <= h} / n``."""
        return int(np.searchsorted(self.observed_lengths, h, side="right")) / self.n

    def gamma_hat(self, h: int) -> float:
        """``1 - F_hat(h - 1)``."""
        if h < 1:
            raise ValueError("h must be >= 1")
        if h > self.max_length:
            return 0.0
        return int(self._at_least[h - 1]) / self.n

    def curve(self) -> DiscountCurve:
        return DiscountCurve.empirical(self._at_least / self.n)

    def tail_sum_survival(self, h: int) -> float:
        """``sum_{j >= h} gamma_hat(j)``, summed over the survival counts."""
        if h < 1:
            raise ValueError("h must be >= 1")
        return int(self._at_least[h - 1 :].sum()) / self.n

    def tail_sum_hinge(self, h: int) -> float:
        """``(1/n) sum_i max(0, H_i - (h - 1))``."""
        if h < 1:
            raise ValueError("h must be >= 1")
        return int(np.maximum(self.observed_lengths - (h - 1), 0).sum()) / self.n


def empirical_survival(samples) -> EmpiricalSurvival:
    return EmpiricalSurvival(samples)


def tail_sum_hat(es: EmpiricalSurvival, h: int) -> float:
    return es.tail_sum_survival(h)


def default_gamma0(H_star: int) -> DiscountCurve:
    """Geometric 0.5 truncated after ``H_star`` steps."""
    return DiscountCurve.custom(0.5 ** np.arange(H_star))


def run_estimating_learner(
    mdp: TabularMdp,
    dist: HorizonDistribution,
    H_star: int,
    confidence: float,
    T: int,
    rng,
    *,
    gamma0: DiscountCurve | None = None,
    reset_counts_per_block: bool = False,
    start_states=0,
    regret_mode: str = REALIZED,
    **agent_opts,
) -> RegretTrace:
    """Generalized learner driven by a re-estimated discount curve.

    Each block restarts the Q layers with the current estimate; transition
    counts carry over unless ``reset_counts_per_block``.  Rows are tagged with
    their block index.
    """
    if H_star < 1:
        raise ValueError("H_star must be >= 1")
    trace = RegretTrace()
    if T <= 0:
        return trace
    schedule = block_schedule(T, confidence)
    src_rng, dyn_rng = split_rng(rng)
    source = EpisodeSource(dist, start_states, src_rng)
    scorer = Scorer(mdp, regret_mode, dist.curve)
    prev = None
    for j, length in enumerate(schedule.block_lengths):
        if j == 0:
            curve = gamma0 if gamma0 is not None else default_gamma0(H_star)
            delta_hat = curve.tail_sum(H_star + 1)
        else:
            es = EmpiricalSurvival(trace.horizon)
            curve = es.curve()
            delta_hat = es.tail_sum_survival(H_star + 1) if H_star + 1 <= es.max_length else 0.0
        agent = AgentState(
            mdp.num_states, mdp.num_actions, curve, delta_hat, confidence, length, n_layers=H_star, **agent_opts
        )
        if prev is not None and not reset_counts_per_block:
            agent.count_sa = prev.count_sa.copy()
            agent.count_sas = prev.count_sas.copy()
        run_episodes(mdp, GeneralizedLearner(agent, mdp.reward), source, dyn_rng, length, scorer, trace, block=j)
        prev = agent
    return trace
