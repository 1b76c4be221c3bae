"""Tabular RL for episodic MDPs whose episode lengths are random.

The episode-length distribution is handled through its survival function,
read as a general discount curve ``gamma(h) = P(H >= h)``.
"""
from .discount import DiscountCurve, effective_horizon, recommended_params, regret_bound_terms, t_function
from .horizon import HorizonDistribution
from .mdp import EpisodeRecord, TabularMdp, run_episode, step
from .planning import (
    NonStationaryPolicy,
    RegretTrace,
    discounted_optimal,
    evaluate_policy_curve,
    evaluate_policy_finite,
    finite_horizon_optimal,
)
from .ucbvi import AgentState, run_learner

__version__ = "0.1.0"

__all__ = [
    "AgentState",
    "DiscountCurve",
    "EpisodeRecord",
    "HorizonDistribution",
    "NonStationaryPolicy",
    "RegretTrace",
    "TabularMdp",
    "discounted_optimal",
    "effective_horizon",
    "evaluate_policy_curve",
    "evaluate_policy_finite",
    "finite_horizon_optimal",
    "recommended_params",
    "regret_bound_terms",
    "run_episode",
    "run_learner",
    "step",
    "t_function",
]
