"""Adaptive coarse ranking: sort stochastic items into ordered clusters of
pre-specified sizes with as few samples (or pairwise comparisons) as possible.

The package bundles the adaptive engine, reward/comparison environments,
baseline algorithms, sample-complexity analysis, evaluation metrics, a Monte
Carlo benchmarking harness with a CLI, and an HTTP service for live
human-rated sessions.
"""

from .bernoulli import (
    ExplorationSchedule,
    beta_value,
    chernoff_information,
    chernoff_point,
    exploration_rate,
    kl_bernoulli,
    kl_ucb_lower,
    kl_ucb_upper,
    min_k1,
    solve_c0,
)

__all__ = [
    "ExplorationSchedule",
    "beta_value",
    "chernoff_information",
    "chernoff_point",
    "exploration_rate",
    "kl_bernoulli",
    "kl_ucb_lower",
    "kl_ucb_upper",
    "min_k1",
    "solve_c0",
]

__version__ = "0.1.0"
