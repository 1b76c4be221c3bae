"""Episode loop shared by every learner: draw (x_k, H_k), roll out, score."""
from __future__ import annotations

from typing import Protocol

import numpy as np

from .discount import DiscountCurve
from .horizon import HorizonDistribution
from .mdp import TabularMdp, run_episode
from .planning import (
    NonStationaryPolicy,
    RegretTrace,
    discounted_optimal,
    evaluate_deterministic_at,
    evaluate_policy_curve,
    optimal_values_by_horizon,
)

REALIZED = "realized"
DISCOUNTED = "discounted"


class Learner(Protocol):
    def begin_episode(self) -> None: ...

    def policy_tables(self) -> tuple[np.ndarray, np.ndarray]: ...

    def act(self, h: int, state: int) -> int: ...

    def observe(self, h: int, state: int, action: int, next_state: int) -> None: ...


class OptimalValues:
    """Lazily extended table of ``V*(s; H)``."""

    def __init__(self, mdp: TabularMdp, H: int = 16):
        self.mdp = mdp
        self.table = optimal_values_by_horizon(mdp, H)

    def __call__(self, state: int, H: int) -> float:
        if H >= self.table.shape[0]:
            n = max(H, 2 * (self.table.shape[0] - 1))
            self.table = optimal_values_by_horizon(self.mdp, n)
        return float(self.table[H, state])


class EpisodeSource:
    """Start states and episode lengths, drawn from their own stream.

    Keeping these draws apart from transition sampling gives every learner run
    with the same seed the same ``(x_k, H_k)`` sequence.
    """

    def __init__(self, dist: HorizonDistribution, start_states, rng: np.random.Generator):
        self.dist = dist
        self.starts = np.atleast_1d(np.asarray(start_states, dtype=int))
        self.rng = rng

    def next(self) -> tuple[int, int, bool]:
        x = int(self.starts[self.rng.integers(self.starts.size)]) if self.starts.size > 1 else int(self.starts[0])
        H, capped = self.dist.draw(self.rng)
        return x, H, capped


def split_rng(rng) -> tuple[np.random.Generator, np.random.Generator]:
    """Child streams ``(episode_source, dynamics)`` from a generator or seed."""
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    a, b = rng.spawn(2)
    return a, b


class Scorer:
    """Computes ``(v_star, v_pi, bracket)`` for one episode under either regret mode."""

    def __init__(self, mdp: TabularMdp, mode: str = REALIZED, curve: DiscountCurve | None = None, L: int | None = None):
        if mode not in (REALIZED, DISCOUNTED):
            raise ValueError(f"unknown regret mode {mode!r}")
        if mode == DISCOUNTED and curve is None:
            raise ValueError("discounted regret needs the true discount curve")
        self.mdp = mdp
        self.mode = mode
        self.curve = curve
        self.L = L
        if mode == REALIZED:
            self.vstar = OptimalValues(mdp)
        else:
            opt, _, self.err = discounted_optimal(mdp, curve, L)
            self.opt = opt.values

    def __call__(self, x: int, H: int, actions: np.ndarray, tail: np.ndarray) -> tuple[float, float, float]:
        if self.mode == REALIZED:
            return self.vstar(x, H), evaluate_deterministic_at(self.mdp, actions, tail, x, H), 0.0
        pol = NonStationaryPolicy.from_actions(actions, self.mdp.num_actions, tail)
        val, _ = evaluate_policy_curve(self.mdp, pol, self.curve, self.L)
        return float(self.opt[x]), float(val[x]), self.err


def run_episodes(
    mdp: TabularMdp,
    learner: Learner,
    source: EpisodeSource,
    dynamics_rng: np.random.Generator,
    T: int,
    scorer: Scorer,
    trace: RegretTrace | None = None,
    block: int = 0,
) -> RegretTrace:
    """Run ``T`` episodes of ``learner``, appending one scored row per episode."""
    trace = RegretTrace() if trace is None else trace
    for _ in range(T):
        learner.begin_episode()
        actions, tail = learner.policy_tables()
        x, H, capped = source.next()
        if capped:
            trace.warnings.append(f"episode {len(trace) + 1}: length capped at {H}")

        def observe(h, tr):
            learner.observe(h, tr.state, tr.action, tr.next_state)

        run_episode(mdp, learner.act, x, H, dynamics_rng, on_step=observe)
        v_star, v_pi, bracket = scorer(x, H, actions, tail)
        trace.append(len(trace) + 1, x, H, v_star, v_pi, block=block, bracket=bracket)
    return trace

