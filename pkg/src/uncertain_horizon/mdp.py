"""Finite MDPs and episode simulation with externally drawn episode lengths."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

ROW_TOL = 1e-9

Policy = Callable[[int, int], int]
"""A step-indexed policy: ``policy(h, state) -> action`` with ``h`` starting at 1."""


class MdpError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TabularMdp:
    """Finite MDP with deterministic rewards in [0, 1] and absorbing terminal states.

    ``transition`` is indexed ``[state, action, next_state]`` and ``reward`` is
    indexed ``[state, action]``.  Arrays are copied and frozen on construction.
    """

    transition: np.ndarray
    reward: np.ndarray
    terminal: np.ndarray = None  # type: ignore[assignment]

    def __post_init__(self):
        P = np.array(self.transition, dtype=float)
        R = np.array(self.reward, dtype=float)
        if P.ndim != 3 or P.shape[0] != P.shape[2]:
            raise MdpError(f"transition must have shape (S, A, S), got {P.shape}")
        S, A, _ = P.shape
        if S < 1 or A < 1:
            raise MdpError("need at least one state and one action")
        if R.shape != (S, A):
            raise MdpError(f"reward must have shape {(S, A)}, got {R.shape}")
        if self.terminal is None:
            term = np.zeros(S, dtype=bool)
        else:
            term = np.array(self.terminal, dtype=bool)
        if term.shape != (S,):
            raise MdpError(f"terminal mask must have length {S}")
        if np.any(P < 0):
            raise MdpError("transition has negative entries")
        if np.any(np.abs(P.sum(axis=2) - 1.0) > ROW_TOL):
            raise MdpError("transition rows must sum to 1")
        if np.any(R < 0) or np.any(R > 1):
            raise MdpError("rewards must lie in [0, 1]")
        for s in np.flatnonzero(term):
            if np.any(P[s, :, s] != 1.0) or np.any(R[s] != 0.0):
                raise MdpError(f"terminal state {s} must self-loop with zero reward")
        for arr in (P, R, term):
            arr.setflags(write=False)
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "reward", R)
        object.__setattr__(self, "terminal", term)
        object.__setattr__(self, "_cdf", np.cumsum(P, axis=2))

    @property
    def num_states(self) -> int:
        return self.transition.shape[0]

    @property
    def num_actions(self) -> int:
        return self.transition.shape[1]

    def to_dict(self) -> dict:
        return {
            "num_states": self.num_states,
            "num_actions": self.num_actions,
            "transition": self.transition.tolist(),
            "reward": self.reward.tolist(),
            "terminal": self.terminal.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TabularMdp":
        mdp = cls(data["transition"], data["reward"], data.get("terminal"))
        if "num_states" in data and data["num_states"] != mdp.num_states:
            raise MdpError("num_states does not match transition shape")
        if "num_actions" in data and data["num_actions"] != mdp.num_actions:
            raise MdpError("num_actions does not match transition shape")
        return mdp

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "TabularMdp":
        return cls.from_dict(json.loads(text))


class Transition(NamedTuple):
    state: int
    action: int
    reward: float
    next_state: int


@dataclass
class EpisodeRecord:
    start_state: int
    drawn_length: int
    trajectory: list[Transition] = field(default_factory=list)

    @property
    def total_reward(self) -> float:
        return float(sum(t.reward for t in self.trajectory))


def _check_index(value: int, bound: int, what: str) -> int:
    if not 0 <= value < bound:
        raise IndexError(f"{what} {value} out of range [0, {bound})")
    return int(value)


def step(mdp: TabularMdp, state: int, action: int, rng: np.random.Generator) -> tuple[int, float]:
    """Sample one transition; consumes exactly one uniform draw from ``rng``."""
    state = _check_index(state, mdp.num_states, "state")
    action = _check_index(action, mdp.num_actions, "action")
    cdf = mdp._cdf[state, action]
    u = rng.random()
    nxt = int(np.searchsorted(cdf, u, side="right"))
    # guard against cdf[-1] rounding slightly below 1
    nxt = min(nxt, mdp.num_states - 1)
    while mdp.transition[state, action, nxt] == 0.0:
        nxt -= 1
    return nxt, float(mdp.reward[state, action])


def run_episode(
    mdp: TabularMdp,
    policy: Policy,
    start_state: int,
    horizon: int,
    rng: np.random.Generator,
    on_step: Callable[[int, Transition], None] | None = None,
) -> EpisodeRecord:
    """Roll ``policy`` for ``horizon`` steps or until a terminal state is entered.

    ``on_step(h, transition)`` is called after every recorded step, which is how
    learners observe their own rollouts.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    state = _check_index(start_state, mdp.num_states, "start state")
    record = EpisodeRecord(start_state=state, drawn_length=int(horizon))
    if mdp.terminal[state]:
        return record
    for h in range(1, horizon + 1):
        action = policy(h, state)
        nxt, r = step(mdp, state, action, rng)
        tr = Transition(state, int(action), r, nxt)
        record.trajectory.append(tr)
        if on_step is not None:
            on_step(h, tr)
        state = nxt
        if mdp.terminal[state]:
            break
    return record
