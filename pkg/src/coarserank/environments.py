"""Reward oracles: direct Bernoulli feedback, pairwise duels from an explicit
preference matrix or a Bradley-Terry-Luce model, and the Borda adapter that
turns pairwise feedback into single-arm pulls.

Instances are immutable; randomness always comes in through an explicit
numpy Generator so trials can own independent, reproducible streams.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np


@dataclass(frozen=True)
class BernoulliInstance:
    """K arms with fixed success probabilities (any order)."""

    means: tuple[float, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if any(not 0.0 <= p <= 1.0 for p in self.means):
            raise ValueError("all means must lie in [0, 1]")

    @property
    def num_arms(self) -> int:
        return len(self.means)

    def sorted_view(self) -> tuple[tuple[float, ...], tuple[int, ...]]:
        """(means in decreasing order, arm ids in that order)."""
        order = sorted(range(len(self.means)), key=lambda a: (-self.means[a], a))
        return tuple(self.means[a] for a in order), tuple(order)


class PreferenceMatrix:
    """P[i, j] = probability that item i beats item j in a duel."""

    def __init__(self, p: np.ndarray):
        p = np.asarray(p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError(f"preference matrix must be square, got {p.shape}")
        if p.shape[0] < 2:
            raise ValueError("need at least 2 items")
        off = ~np.eye(p.shape[0], dtype=bool)
        if np.any(p[off] < 0.0) or np.any(p[off] > 1.0):
            raise ValueError("win probabilities must lie in [0, 1]")
        residual = np.abs(p + p.T - 1.0)
        residual[np.diag_indices_from(residual)] = 0.0
        if residual.max() > 1e-9:
            raise ValueError("P[i,j] + P[j,i] must equal 1 for i != j")
        self._p = p.copy()
        np.fill_diagonal(self._p, 0.5)  # diagonal is unused; pin by convention
        self._p.flags.writeable = False

    @property
    def matrix(self) -> np.ndarray:
        return self._p

    @property
    def num_items(self) -> int:
        return self._p.shape[0]

    def __getitem__(self, idx: tuple[int, int]) -> float:
        return float(self._p[idx])


@dataclass(frozen=True)
class BTLInstance:
    """Latent-score comparison model: P(i beats j) = e^th_i/(e^th_i + e^th_j)."""

    scores: tuple[float, ...]
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if any(not math.isfinite(s) for s in self.scores):
            raise ValueError("scores must be finite")
        if len(self.scores) < 2:
            raise ValueError("need at least 2 items")

    @property
    def num_items(self) -> int:
        return len(self.scores)

    def preference_matrix(self) -> PreferenceMatrix:
        th = np.asarray(self.scores, dtype=float)
        diff = th[:, None] - th[None, :]
        with np.errstate(over="ignore"):
            p = 1.0 / (1.0 + np.exp(-diff))
        return PreferenceMatrix(p)


def draw_direct(instance: BernoulliInstance, arm: int, rng: np.random.Generator) -> float:
    """One Bernoulli reward from the given arm."""
    if not 0 <= arm < instance.num_arms:
        raise ValueError(f"arm {arm} out of range")
    return 1.0 if rng.random() < instance.means[arm] else 0.0


def duel(P: PreferenceMatrix, i: int, j: int, rng: np.random.Generator) -> int:
    """Resolve one noisy comparison; returns the winning item id."""
    if i == j:
        raise ValueError("an item cannot duel itself")
    return i if rng.random() < P[i, j] else j


def borda_pull(
    P: PreferenceMatrix, arm: int, rng: np.random.Generator
) -> tuple[float, int]:
    """Pull ``arm`` through the pairwise channel.

    A uniformly random opponent j != arm is drawn, the duel is resolved, and
    the reward is 1 iff ``arm`` won, so the marginal reward probability is
    the arm's Borda score. The opponent is returned so event logs can be
    replayed deterministically.
    """
    k = P.num_items
    j = int(rng.integers(0, k - 1))
    if j >= arm:
        j += 1
    winner = duel(P, arm, j, rng)
    return (1.0 if winner == arm else 0.0), j


def borda_scores(P: PreferenceMatrix) -> tuple[float, ...]:
    """Exact Borda scores: each item's mean win probability against a
    uniformly random opponent."""
    p = P.matrix
    k = P.num_items
    totals = p.sum(axis=1) - np.diag(p)  # drop the pinned diagonal
    return tuple(float(v) for v in totals / (k - 1))


def trial_rng(master_seed: int, trial: int) -> np.random.Generator:
    """Independent, reproducible stream for one trial of one experiment."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(trial,)))


# ---------------------------------------------------------------------------
# instance files: {"kind": "direct"|"matrix"|"btl", ...}

Instance = Union[BernoulliInstance, PreferenceMatrix, BTLInstance]


def instance_to_dict(instance: Instance) -> dict:
    if isinstance(instance, BernoulliInstance):
        out: dict = {"kind": "direct", "means": list(instance.means)}
        if instance.seed is not None:
            out["seed"] = instance.seed
        return out
    if isinstance(instance, PreferenceMatrix):
        return {"kind": "matrix", "matrix": instance.matrix.tolist()}
    if isinstance(instance, BTLInstance):
        out = {"kind": "btl", "scores": list(instance.scores)}
        if instance.seed is not None:
            out["seed"] = instance.seed
        return out
    raise TypeError(f"not an instance: {type(instance)!r}")


def instance_from_dict(data: dict) -> Instance:
    kind = data.get("kind")
    if kind == "direct":
        return BernoulliInstance(
            means=tuple(data["means"]), seed=data.get("seed")
        )
    if kind == "matrix":
        return PreferenceMatrix(np.asarray(data["matrix"], dtype=float))
    if kind == "btl":
        return BTLInstance(scores=tuple(data["scores"]), seed=data.get("seed"))
    raise ValueError(f"unknown instance kind: {kind!r}")


def load_instance(path: Union[str, Path]) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(instance: Instance, path: Union[str, Path]) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=2)
        fh.write("\n")
