"""Exact planning and policy evaluation used as ground truth for regret.

Two objectives are supported: the undiscounted ``H``-step value ``V(x; H)`` and
the general-discount value ``V(x; gamma) = E[sum_h gamma(h) r_h]``, the latter
computed through the shifted-discount recursion

    Q_h(x, a) = r(x, a) + gamma(h+1)/gamma(h) * E[V_{h+1}(x')]

truncated after ``L`` layers.  With rewards in [0, 1] the truncation error is at
most ``Gamma(L+1)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .discount import DiscountCurve, effective_horizon
from .horizon import HorizonDistribution
from .mdp import TabularMdp


class CoverageError(KeyError):
    pass


class NonStationaryPolicy:
    """Per-step (possibly randomized) Markov policy with a tail used after ``L`` steps.

    ``layers[h-1]`` is an ``(S, A)`` matrix of action probabilities for step
    ``h``; ``tail`` is used for every step beyond ``len(layers)``.
    """

    def __init__(self, layers: np.ndarray, tail: np.ndarray | None = None):
        layers = np.asarray(layers, dtype=float)
        if layers.ndim != 3:
            raise ValueError("layers must have shape (L, S, A)")
        if np.any(layers < 0) or np.any(np.abs(layers.sum(axis=2) - 1.0) > 1e-9):
            raise ValueError("every policy row must be a probability vector")
        self.layers = layers
        self.tail = layers[-1] if tail is None else np.asarray(tail, dtype=float)

    @classmethod
    def from_actions(cls, actions, num_actions: int, tail=None) -> "NonStationaryPolicy":
        """Deterministic policy from an ``(L, S)`` table of action indices."""
        acts = np.atleast_2d(np.asarray(actions, dtype=int))
        if np.any(acts < 0) or np.any(acts >= num_actions):
            raise IndexError("policy action out of range")
        eye = np.eye(num_actions)
        tail_m = None if tail is None else eye[np.asarray(tail, dtype=int)]
        return cls(eye[acts], tail_m)

    @classmethod
    def stationary(cls, actions, num_actions: int) -> "NonStationaryPolicy":
        return cls.from_actions([actions], num_actions)

    @property
    def num_layers(self) -> int:
        return self.layers.shape[0]

    def matrix(self, h: int) -> np.ndarray:
        """Action probabilities ``(S, A)`` at step ``h`` (1-based)."""
        return self.layers[h - 1] if h <= self.num_layers else self.tail

    def actions(self, h: int) -> np.ndarray:
        return np.argmax(self.matrix(h), axis=1)

    def __call__(self, h: int, state: int) -> int:
        # greedy read-out; only exact for deterministic policies
        return int(np.argmax(self.matrix(h)[state]))


@dataclass
class ValueTable:
    values: np.ndarray
    objective: tuple
    error_bound: float = 0.0

    def __getitem__(self, state):
        return self.values[state]


def _truncation(curve: DiscountCurve, L: int | None) -> int:
    if L is None:
        L = effective_horizon(curve, 1e-6 * curve.total).n_delta
    if L < 1:
        raise ValueError("truncation L must be >= 1")
    return int(min(L, curve.support_end))


def _ratios(curve: DiscountCurve, L: int) -> np.ndarray:
    h = np.arange(1, L + 1)
    return np.atleast_1d(curve.gamma(h + 1)) / np.atleast_1d(curve.gamma(h))


# ------------------------------------------------------------------ optimal
def optimal_values_by_horizon(mdp: TabularMdp, H_max: int) -> np.ndarray:
    """``out[H, s] = V*(s; H)`` for ``H = 0 .. H_max``."""
    out = np.zeros((H_max + 1, mdp.num_states))
    for H in range(1, H_max + 1):
        out[H] = np.max(mdp.reward + mdp.transition @ out[H - 1], axis=1)
    return out


def finite_horizon_optimal(mdp: TabularMdp, H: int) -> tuple[ValueTable, NonStationaryPolicy]:
    if H < 1:
        raise ValueError("H must be >= 1")
    v = np.zeros(mdp.num_states)
    acts = np.zeros((H, mdp.num_states), dtype=int)
    for h in range(H, 0, -1):
        q = mdp.reward + mdp.transition @ v
        acts[h - 1] = np.argmax(q, axis=1)
        v = q.max(axis=1)
    return ValueTable(v, ("horizon", H)), NonStationaryPolicy.from_actions(acts, mdp.num_actions)


def discounted_optimal(
    mdp: TabularMdp, curve: DiscountCurve, L: int | None = None
) -> tuple[ValueTable, NonStationaryPolicy, float]:
    """Optimal general-discount values, truncated after ``L`` layers.

    The returned values satisfy ``V <= V*(.; gamma) <= V + error_bound``.
    """
    L = _truncation(curve, L)
    ratios = _ratios(curve, L)
    v = np.zeros(mdp.num_states)
    acts = np.zeros((L, mdp.num_states), dtype=int)
    for h in range(L, 0, -1):
        q = mdp.reward + ratios[h - 1] * (mdp.transition @ v)
        acts[h - 1] = np.argmax(q, axis=1)
        v = q.max(axis=1)
    err = curve.tail_sum(L + 1)
    table = ValueTable(v, ("curve", curve.to_dict()), err)
    return table, NonStationaryPolicy.from_actions(acts, mdp.num_actions), err


# --------------------------------------------------------------- evaluation
def _policy_backup(mdp: TabularMdp, pi: np.ndarray, v_next: np.ndarray, scale: float) -> np.ndarray:
    q = mdp.reward + scale * (mdp.transition @ v_next)
    return np.sum(pi * q, axis=1)


def evaluate_policy_finite(mdp: TabularMdp, policy: NonStationaryPolicy, H: int) -> ValueTable:
    if H < 1:
        raise ValueError("H must be >= 1")
    v = np.zeros(mdp.num_states)
    for h in range(H, 0, -1):
        v = _policy_backup(mdp, policy.matrix(h), v, 1.0)
    return ValueTable(v, ("horizon", H))


def evaluate_policy_curve(
    mdp: TabularMdp, policy: NonStationaryPolicy, curve: DiscountCurve, L: int | None = None
) -> tuple[ValueTable, float]:
    L = _truncation(curve, L)
    ratios = _ratios(curve, L)
    v = np.zeros(mdp.num_states)
    for h in range(L, 0, -1):
        v = _policy_backup(mdp, policy.matrix(h), v, ratios[h - 1])
    err = curve.tail_sum(L + 1)
    return ValueTable(v, ("curve", curve.to_dict()), err), err


def evaluate_deterministic_at(mdp: TabularMdp, actions: np.ndarray, tail: np.ndarray, state: int, H: int) -> float:
    """Fast ``V^pi(state; H)`` for a deterministic policy given as action tables.

    ``actions[h-1]`` is the action table at step ``h``; ``tail`` covers steps past
    ``len(actions)``.
    """
    S = mdp.num_states
    idx = np.arange(S)
    v = np.zeros(S)
    n = len(actions)
    for h in range(H, 0, -1):
        a = actions[h - 1] if h <= n else tail
        v = mdp.reward[idx, a] + mdp.transition[idx, a] @ v
    return float(v[state])


# ------------------------------------------------------------------ mixture
def mixture_weights(dist: HorizonDistribution, h: int, L: int) -> np.ndarray:
    """Conditional weights ``P(H = j) / P(H >= h)`` for ``j = h .. L``."""
    s = dist.survival(h)
    if s == 0.0:
        raise ValueError(f"P(H >= {h}) = 0")
    return np.array([dist.pmf(j) for j in range(h, L + 1)]) / s


def mixed_horizon_policy(
    mdp: TabularMdp,
    dist: HorizonDistribution,
    per_horizon_optima: Mapping[int, NonStationaryPolicy],
    L: int,
) -> NonStationaryPolicy:
    """Randomized policy that at step ``h`` plays ``pi*_j`` with ``j ~ P(H = j | H >= h)``.

    ``per_horizon_optima[j]`` must be a ``j``-step optimal policy for every
    ``j <= L`` with positive mass.  Steps past the last positive-survival index
    reuse the final layer.
    """
    last = int(min(L, dist.curve.support_end))
    for j in range(1, last + 1):
        if dist.pmf(j) > 0 and j not in per_horizon_optima:
            raise CoverageError(f"no optimal policy supplied for horizon {j}")
    layers = np.zeros((last, mdp.num_states, mdp.num_actions))
    for h in range(1, last + 1):
        w = mixture_weights(dist, h, last)
        # mass beyond L is folded onto horizon L
        w[-1] += 1.0 - w.sum()
        for j, wj in zip(range(h, last + 1), w):
            if wj > 0:
                layers[h - 1] += wj * per_horizon_optima[j].matrix(h)
    return NonStationaryPolicy(layers)


# ------------------------------------------------------------------- regret
@dataclass
class RegretTrace:
    """Per-episode regret rows for one run."""

    episode: list[int] = field(default_factory=list)
    start_state: list[int] = field(default_factory=list)
    horizon: list[int] = field(default_factory=list)
    v_star: list[float] = field(default_factory=list)
    v_pi: list[float] = field(default_factory=list)
    block: list[int] = field(default_factory=list)
    bracket: list[float] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    def append(self, k, x, H, v_star, v_pi, block=0, bracket=0.0):
        self.episode.append(int(k))
        self.start_state.append(int(x))
        self.horizon.append(int(H))
        self.v_star.append(float(v_star))
        self.v_pi.append(float(v_pi))
        self.block.append(int(block))
        self.bracket.append(float(bracket))

    def __len__(self):
        return len(self.episode)

    @property
    def regret(self) -> np.ndarray:
        return np.asarray(self.v_star) - np.asarray(self.v_pi)

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.regret)


def regret_realized(mdp: TabularMdp, episodes: Sequence[tuple[int, int, float]]) -> RegretTrace:
    """Realized regret from ``(start_state, H_k, learner_value_k)`` triples."""
    trace = RegretTrace()
    if not episodes:
        return trace
    H_max = max(H for _, H, _ in episodes)
    vstar = optimal_values_by_horizon(mdp, H_max)
    for k, (x, H, v_pi) in enumerate(episodes, start=1):
        trace.append(k, x, H, vstar[H, x], v_pi)
    return trace


def regret_discounted(
    mdp: TabularMdp,
    episodes: Sequence[tuple[int, NonStationaryPolicy]],
    curve: DiscountCurve,
    L: int | None = None,
) -> RegretTrace:
    """Discounted regret from ``(start_state, learner_policy)`` pairs.

    Every row carries the truncation bracket ``Gamma(L+1)``; each entry is exact
    to within twice that.
    """
    trace = RegretTrace()
    if not episodes:
        return trace
    opt, _, err = discounted_optimal(mdp, curve, L)
    for k, (x, pol) in enumerate(episodes, start=1):
        val, _ = evaluate_policy_curve(mdp, pol, curve, L)
        trace.append(k, x, 0, opt[x], val[x], bracket=err)
    return trace
