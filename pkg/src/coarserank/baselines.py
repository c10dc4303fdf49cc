"""Comparator algorithms: uniform round-robin sampling, successive
elimination over rank positions ("active ranking"), noisy quicksort with
early cluster stopping, and a Bradley-Terry-Luce maximum-likelihood
aggregator.

The round-based baselines reuse the engine's confidence-bound machinery
(same divergence, same exploration rate) so that experiments isolate the
sampling strategy rather than the bound construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .bernoulli import ExplorationSchedule
from .engine import (
    ArmStats,
    ClusterSpec,
    CoarseRanking,
    Sampler,
    _beta,
    _check_reward,
    _make_arm,
)

Comparator = Callable[[int, int], bool]
"""comparator(i, j) answers one noisy query: True iff i precedes j."""


def ranking_from_values(values: Sequence[float], spec: ClusterSpec) -> CoarseRanking:
    """Rank arms by decreasing value (ties to the lower id) and cut the
    ordering into the spec's clusters."""
    if len(values) != spec.num_arms:
        raise ValueError("value count does not match cluster spec")
    order = sorted(range(len(values)), key=lambda a: (-values[a], a))
    sigma = [0] * len(values)
    for rank0, arm in enumerate(order):
        sigma[arm] = rank0 + 1
    cuts = (0,) + spec.boundaries
    clusters = tuple(
        frozenset(order[cuts[i] : cuts[i + 1]]) for i in range(spec.num_clusters)
    )
    return CoarseRanking(sigma=tuple(sigma), clusters=clusters)


# ---------------------------------------------------------------------------
# uniform sampling


@dataclass(frozen=True)
class UniformState:
    t: int  # completed rounds; every arm has exactly t pulls
    pulls: tuple[int, ...]
    rewards: tuple[float, ...]
    spec: ClusterSpec

    @property
    def total_pulls(self) -> int:
        return sum(self.pulls)


def uniform_init(spec: ClusterSpec) -> UniformState:
    k = spec.num_arms
    return UniformState(t=0, pulls=(0,) * k, rewards=(0.0,) * k, spec=spec)


def uniform_round(state: UniformState, sampler: Sampler) -> UniformState:
    """Sample every arm exactly once, in arm-id order."""
    draws = [_check_reward(sampler(a)) for a in range(state.spec.num_arms)]
    return UniformState(
        t=state.t + 1,
        pulls=tuple(n + 1 for n in state.pulls),
        rewards=tuple(s + r for s, r in zip(state.rewards, draws)),
        spec=state.spec,
    )


def uniform_ranking(state: UniformState) -> CoarseRanking:
    means = tuple(
        s / n if n else 0.0 for s, n in zip(state.rewards, state.pulls)
    )
    return ranking_from_values(means, state.spec)


# ---------------------------------------------------------------------------
# active ranking (successive elimination over rank positions)


@dataclass(frozen=True)
class ActiveRankingState:
    t: int
    arms: tuple[ArmStats, ...]
    active: frozenset[int]
    spec: ClusterSpec
    schedule: ExplorationSchedule

    @property
    def finished(self) -> bool:
        return not self.active

    @property
    def total_pulls(self) -> int:
        return sum(a.pulls for a in self.arms)


def _ar_removal_sweep(
    arms: tuple[ArmStats, ...], active: frozenset[int], spec: ClusterSpec
) -> frozenset[int]:
    """Drop every active arm whose interval pins it inside one cluster.

    Arm a settles into cluster g once at least kappa_{g-1} other arms sit
    confidently above it (their lower bound beats a's upper bound) and at
    least K - kappa_g sit confidently below. Removed arms keep the bounds
    they had at removal time and still count as comparators here.
    """
    k = len(arms)
    kappas = (0,) + spec.boundaries
    kept = []
    for a in sorted(active):
        above = sum(
            1 for b in range(k) if b != a and arms[b].lower > arms[a].upper
        )
        below = sum(
            1 for b in range(k) if b != a and arms[b].upper < arms[a].lower
        )
        settled = any(
            above >= kappas[g - 1] and below >= k - kappas[g]
            for g in range(1, spec.num_clusters + 1)
        )
        if not settled:
            kept.append(a)
    return frozenset(kept)


def ar_init(
    spec: ClusterSpec, schedule: ExplorationSchedule, sampler: Sampler
) -> ActiveRankingState:
    """One pull per arm, then the first removal sweep."""
    if schedule.num_arms != spec.num_arms:
        raise ValueError("schedule and cluster spec disagree on the arm count")
    draws = [_check_reward(sampler(a)) for a in range(spec.num_arms)]
    beta = _beta(1, schedule)
    arms = tuple(_make_arm(1, r, beta) for r in draws)
    active = _ar_removal_sweep(arms, frozenset(range(spec.num_arms)), spec)
    return ActiveRankingState(
        t=1, arms=arms, active=active, spec=spec, schedule=schedule
    )


def ar_round(state: ActiveRankingState, sampler: Sampler) -> ActiveRankingState:
    """Sample every still-active arm once, refresh their bounds at the new
    exploration rate, and run the removal sweep."""
    if state.finished:
        raise ValueError("active ranking already terminated")
    draws = {a: _check_reward(sampler(a)) for a in sorted(state.active)}
    t = state.t + 1
    beta = _beta(t, state.schedule)
    arms = tuple(
        _make_arm(s.pulls + 1, s.reward_sum + draws[a], beta)
        if a in draws
        else s  # removed arms keep their frozen bounds
        for a, s in enumerate(state.arms)
    )
    active = _ar_removal_sweep(arms, state.active, state.spec)
    return ActiveRankingState(
        t=t, arms=arms, active=active, spec=state.spec, schedule=state.schedule
    )


def ar_ranking(state: ActiveRankingState) -> CoarseRanking:
    return ranking_from_values([a.mean_hat for a in state.arms], state.spec)


def run_active_ranking(
    spec: ClusterSpec,
    schedule: ExplorationSchedule,
    sampler: Sampler,
    budget_cap: Optional[int] = None,
) -> ActiveRankingState:
    """Rounds until every arm settles, or until the next round would push
    total pulls past ``budget_cap``."""
    if budget_cap is not None and budget_cap < spec.num_arms:
        raise ValueError("budget cap smaller than the initialization cost")
    state = ar_init(spec, schedule, sampler)
    while not state.finished:
        if (
            budget_cap is not None
            and state.total_pulls + len(state.active) > budget_cap
        ):
            break
        state = ar_round(state, sampler)
    return state


# ---------------------------------------------------------------------------
# noisy quicksort with early cluster stopping


@dataclass(frozen=True)
class QuicksortResult:
    order: tuple[int, ...]  # item ids, best position first
    clusters: tuple[frozenset[int], ...]
    comparisons: int


def noisy_quicksort(
    items: Sequence[int],
    comparator: Comparator,
    spec: ClusterSpec,
    rng: Optional[np.random.Generator] = None,
    pivot_rule: Optional[Callable[[list[int]], int]] = None,
) -> QuicksortResult:
    """Quicksort under single-shot noisy comparisons, stopping recursion as
    soon as a sub-array's global rank interval fits inside one cluster.

    Each unordered pair is queried at most once. Pivots default to a
    uniformly random element of the sub-array; ``pivot_rule`` overrides
    that (it receives the sub-array and returns the pivot item).
    """
    items = list(items)
    if len(items) != spec.num_arms:
        raise ValueError("item count does not match cluster spec")
    if len(set(items)) != len(items):
        raise ValueError("items must be distinct")
    if pivot_rule is None:
        if rng is None:
            raise ValueError("either rng or pivot_rule is required")

        def pivot_rule(sub: list[int]) -> int:
            return sub[int(rng.integers(0, len(sub)))]

    kappas = (0,) + spec.boundaries
    order: list[int] = [0] * len(items)
    comparisons = 0

    def fits_one_cluster(lo: int, hi: int) -> bool:
        return any(
            kappas[j - 1] < lo and hi <= kappas[j]
            for j in range(1, spec.num_clusters + 1)
        )

    def recurse(sub: list[int], lo: int, hi: int) -> None:
        nonlocal comparisons
        if not sub:
            return
        if len(sub) == 1 or fits_one_cluster(lo, hi):
            order[lo - 1 : lo - 1 + len(sub)] = sub
            return
        pivot = pivot_rule(sub)
        better: list[int] = []
        worse: list[int] = []
        for x in sub:
            if x == pivot:
                continue
            comparisons += 1
            (better if comparator(x, pivot) else worse).append(x)
        recurse(better, lo, lo + len(better) - 1)
        order[lo + len(better) - 1] = pivot
        recurse(worse, lo + len(better) + 1, hi)

    recurse(items, 1, len(items))
    starts = (0,) + spec.boundaries
    clusters = tuple(
        frozenset(order[starts[i] : starts[i + 1]])
        for i in range(spec.num_clusters)
    )
    return QuicksortResult(
        order=tuple(order), clusters=clusters, comparisons=comparisons
    )


# ---------------------------------------------------------------------------
# Bradley-Terry-Luce maximum likelihood via minorization-maximization


@dataclass(frozen=True)
class BTLFit:
    """Fitted latent scores, normalized so the minimum is 0."""

    theta: tuple[float, ...]
    iterations: int
    log_likelihood: float  # of the observed duels only, at theta
    objective_path: tuple[float, ...] = ()  # regularized objective per sweep


def _components(num_items: int, edges: set[tuple[int, int]]) -> list[list[int]]:
    adj: list[list[int]] = [[] for _ in range(num_items)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * num_items
    out = []
    for start in range(num_items):
        if seen[start]:
            continue
        stack, comp = [start], []
        seen[start] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in adj[v]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        out.append(sorted(comp))
    return out


def _btl_objective(wins: np.ndarray, gamma: np.ndarray) -> float:
    """Weighted log-likelihood sum(w_ij * log(g_i / (g_i + g_j)))."""
    pair_sum = gamma[:, None] + gamma[None, :]
    with np.errstate(divide="ignore"):
        logp = np.log(gamma[:, None]) - np.log(pair_sum)
    mask = wins > 0
    np.fill_diagonal(mask, False)
    return float((wins[mask] * logp[mask]).sum())


def btl_mle(
    duel_log: Sequence[tuple[int, int, int]],
    num_items: Optional[int] = None,
    track_objective: bool = False,
) -> BTLFit:
    """Fit latent comparison scores to a duel log by maximum likelihood.

    Entries are (i, j, winner) with winner one of i, j. The comparison
    graph over the real duels must be connected. A phantom win and loss of
    weight 0.01 against a virtual opponent keeps the optimum finite for
    unbeaten (or winless) items; the virtual node is dropped from the
    returned scores.
    """
    if not duel_log:
        raise ValueError("duel log is empty")
    max_id = 0
    edges: set[tuple[int, int]] = set()
    for i, j, w in duel_log:
        if i == j:
            raise ValueError(f"self-duel in log: {(i, j, w)}")
        if w != i and w != j:
            raise ValueError(f"winner {w} is neither participant in {(i, j, w)}")
        if min(i, j) < 0:
            raise ValueError(f"negative item id in {(i, j, w)}")
        max_id = max(max_id, i, j)
        edges.add((min(i, j), max(i, j)))
    k = num_items if num_items is not None else max_id + 1
    if max_id >= k:
        raise ValueError(f"item id {max_id} outside num_items={k}")

    comps = _components(k, edges)
    if len(comps) > 1:
        raise ValueError(f"comparison graph is disconnected: components {comps}")

    # real wins plus the phantom games against virtual node k
    wins = np.zeros((k + 1, k + 1))
    for i, j, w in duel_log:
        loser = j if w == i else i
        wins[w, loser] += 1.0
    wins[:k, k] = 0.01
    wins[k, :k] = 0.01

    n_games = wins + wins.T
    total_wins = wins.sum(axis=1)
    gamma = np.ones(k + 1)
    theta = np.zeros(k + 1)
    path: list[float] = []
    iterations = 0
    for iterations in range(1, 10_001):
        pair_sum = gamma[:, None] + gamma[None, :]
        ratio = np.divide(
            n_games, pair_sum, out=np.zeros_like(n_games), where=n_games > 0
        )
        np.fill_diagonal(ratio, 0.0)
        gamma = total_wins / ratio.sum(axis=1)
        gamma /= gamma.min()
        if track_objective:
            path.append(_btl_objective(wins, gamma))
        new_theta = np.log(gamma)
        delta = float(np.abs(new_theta - theta).max())
        theta = new_theta
        if delta < 1e-8:
            break

    real_theta = theta[:k] - theta[:k].min()
    real_gamma = np.exp(real_theta)
    real_wins = wins[:k, :k]
    ll = _btl_objective(real_wins, real_gamma)
    return BTLFit(
        theta=tuple(float(v) for v in real_theta),
        iterations=iterations,
        log_likelihood=ll,
        objective_path=tuple(path),
    )


def btl_ranking(fit: BTLFit, spec: ClusterSpec) -> CoarseRanking:
    return ranking_from_values(fit.theta, spec)
