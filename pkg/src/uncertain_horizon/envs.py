"""Benchmark environments as ``TabularMdp`` instances."""
from __future__ import annotations

import numpy as np

from .mdp import TabularMdp

# Taxi ---------------------------------------------------------------------
TAXI_MAP = (
    "+---------+",
    "|R: | : :G|",
    "| : | : : |",
    "| : : : : |",
    "| | : | : |",
    "|Y| : |B: |",
    "+---------+",
)
TAXI_DEPOTS = ((0, 0), (0, 4), (4, 0), (4, 3))  # R, G, Y, B
TAXI_ACTIONS = ("south", "north", "east", "west", "pickup", "dropoff")
IN_TAXI = 4
STEP_RAW, DELIVER_RAW, ILLEGAL_RAW = -1.0, 20.0, -10.0


def taxi_encode(row: int, col: int, passenger: int, destination: int) -> int:
    return ((row * 5 + col) * 5 + passenger) * 4 + destination


def taxi_decode(state: int) -> tuple[int, int, int, int]:
    state, dest = divmod(state, 4)
    state, passenger = divmod(state, 5)
    row, col = divmod(state, 5)
    return row, col, passenger, dest


def scale_taxi_reward(raw):
    """Affine map of raw Taxi rewards ``[-10, 20]`` onto ``[0, 1]``."""
    return (np.asarray(raw, dtype=float) - ILLEGAL_RAW) / (DELIVER_RAW - ILLEGAL_RAW)


def _taxi_tables() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    desc = [list(line) for line in TAXI_MAP]
    S, A = 500, 6
    nxt = np.zeros((S, A), dtype=int)
    raw = np.zeros((S, A))
    terminal = np.zeros(S, dtype=bool)
    for row in range(5):
        for col in range(5):
            for pas in range(5):
                for dest in range(4):
                    s = taxi_encode(row, col, pas, dest)
                    if pas == dest:
                        terminal[s] = True
                        nxt[s] = s
                        continue
                    for a in range(A):
                        r, c, p = row, col, pas
                        reward = STEP_RAW
                        if a == 0:
                            r = min(row + 1, 4)
                        elif a == 1:
                            r = max(row - 1, 0)
                        elif a == 2 and desc[1 + row][2 * col + 2] == ":":
                            c = min(col + 1, 4)
                        elif a == 3 and desc[1 + row][2 * col] == ":":
                            c = max(col - 1, 0)
                        elif a == 4:
                            if pas < 4 and (row, col) == TAXI_DEPOTS[pas]:
                                p = IN_TAXI
                            else:
                                reward = ILLEGAL_RAW
                        elif a == 5:
                            if pas == IN_TAXI and (row, col) == TAXI_DEPOTS[dest]:
                                p = dest
                                reward = DELIVER_RAW
                            elif pas == IN_TAXI and (row, col) in TAXI_DEPOTS:
                                p = TAXI_DEPOTS.index((row, col))
                            else:
                                reward = ILLEGAL_RAW
                        nxt[s, a] = taxi_encode(r, c, p, dest)
                        raw[s, a] = reward
    return nxt, raw, terminal


def taxi_raw_rewards() -> np.ndarray:
    """Unscaled Taxi rewards (0 in terminal states), for reporting only."""
    return _taxi_tables()[1]


def build_taxi() -> TabularMdp:
    """The 5x5 Taxi grid world with rewards rescaled by ``(r + 10) / 30``.

    States where the passenger sits at its destination are terminal (absorbing,
    zero reward); a successful dropoff enters one of them.
    """
    nxt, raw, terminal = _taxi_tables()
    S, A = nxt.shape
    P = np.zeros((S, A, S))
    P[np.arange(S)[:, None], np.arange(A)[None, :], nxt] = 1.0
    reward = np.where(terminal[:, None], 0.0, scale_taxi_reward(raw))
    return TabularMdp(P, reward, terminal)


def taxi_start_states(mdp: TabularMdp) -> np.ndarray:
    return np.flatnonzero(~mdp.terminal)


# Chain --------------------------------------------------------------------
def build_chain(length: int, slip_prob: float = 0.0) -> TabularMdp:
    """Chain ``0 .. length-1`` with actions left (0) and right (1).

    Right advances with probability ``1 - slip_prob`` and otherwise slips one
    state back; left always moves back.  The reward of ``(s, a)`` is the
    probability that the move lands on the far end, so it is earned on arrival
    and on every step spent there.
    """
    if length < 2:
        raise ValueError("chain length must be >= 2")
    if not 0.0 <= slip_prob < 1.0:
        raise ValueError("slip_prob must lie in [0, 1)")
    S = length
    P = np.zeros((S, 2, S))
    for s in range(S):
        P[s, 0, max(s - 1, 0)] = 1.0
        P[s, 1, min(s + 1, S - 1)] += 1.0 - slip_prob
        P[s, 1, max(s - 1, 0)] += slip_prob
    reward = P[:, :, S - 1].copy()
    return TabularMdp(P, reward)


# Bandit -------------------------------------------------------------------
def build_bandit(means) -> TabularMdp:
    """Single-state MDP whose actions pay ``means``."""
    means = np.asarray(means, dtype=float)
    return TabularMdp(np.ones((1, means.size, 1)), means[None, :])


# Random -------------------------------------------------------------------
def build_random(S: int, A: int, sparsity: float, rng) -> TabularMdp:
    """Random MDP: normalized exponential rows, a fraction ``sparsity`` of entries
    zeroed (at least one successor kept), uniform rewards, no terminal states."""
    if S < 1 or A < 1:
        raise ValueError("S and A must be >= 1")
    if not 0.0 <= sparsity < 1.0:
        raise ValueError("sparsity must lie in [0, 1)")
    if not isinstance(rng, np.random.Generator):
        rng = np.random.default_rng(rng)
    w = rng.exponential(size=(S, A, S))
    drop = rng.random((S, A, S)) < sparsity
    keep = rng.integers(S, size=(S, A))
    drop[np.arange(S)[:, None], np.arange(A)[None, :], keep] = False
    w = np.where(drop, 0.0, w)
    P = w / w.sum(axis=2, keepdims=True)
    reward = rng.random((S, A))
    return TabularMdp(P, reward)


ENV_NAMES = ("taxi", "chain", "random", "bandit")


def build_env(name: str, params: dict | None = None) -> tuple[TabularMdp, np.ndarray]:
    """Build an environment by name; returns the MDP and its start states."""
    params = dict(params or {})
    if name == "taxi":
        if params:
            raise ValueError("taxi takes no parameters")
        mdp = build_taxi()
        return mdp, taxi_start_states(mdp)
    if name == "chain":
        mdp = build_chain(int(params.pop("length")), float(params.pop("slip_prob", 0.0)))
        start = params.pop("start_state", 0)
    elif name == "bandit":
        mdp = build_bandit(params.pop("means"))
        start = 0
    elif name == "random":
        seed = params.pop("seed", 0)
        mdp = build_random(int(params.pop("S")), int(params.pop("A")), float(params.pop("sparsity", 0.0)), seed)
        start = params.pop("start_state", 0)
    else:
        raise ValueError(f"unknown environment {name!r}; expected one of {ENV_NAMES}")
    if params:
        raise ValueError(f"unknown {name} parameters: {sorted(params)}")
    return mdp, np.atleast_1d(start)
