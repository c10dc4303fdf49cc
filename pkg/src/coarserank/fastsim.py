"""Compiled whole-trial simulators for the Monte Carlo harness.

Each simulator replays the exact per-pull behavior of its pure-Python
counterpart (engine.run_to_completion, baselines.run_active_ranking,
repeated baselines.uniform_round) against a pre-drawn tape of uniform
variates: pull number k consumes tape[k], and the reward is
``tape[k] < means[arm]``. Because both paths share the same compiled
bound/exploration kernels and the same tie rules, a fast run and a slow
run on one tape agree bit for bit — the equivalence suite asserts this.

Checkpoints are pull-count budgets; snapshots are taken mid-round at the
exact pull. Checkpoints past a run's stopping point repeat its final
state.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from ._kernels import beta_val, klucb_lower_fast, klucb_upper_fast
from .bernoulli import ExplorationSchedule
from .engine import ClusterSpec
from .environments import trial_rng

STATUS_NATURAL = 0  # stopped on its own
STATUS_BUDGET = 1  # next round would not fit the budget cap
STATUS_TAPE = 2  # next round would not fit the tape (wrappers retry)

_TAPE_START = 1 << 20
_TAPE_MAX = 1 << 25


@njit(cache=True)
def _refresh_bounds(s, n, beta, lower, upper):
    for a in range(s.shape[0]):
        p_hat = s[a] / n[a]
        lower[a] = klucb_lower_fast(p_hat, float(n[a]), beta)
        upper[a] = klucb_upper_fast(p_hat, float(n[a]), beta)


@njit(cache=True)
def _critical_pair(lower, upper, order, kappa):
    k = order.shape[0]
    in_top = np.zeros(k, np.bool_)
    for r in range(kappa):
        in_top[order[r]] = True
    l = -1
    u = -1
    for a in range(k):
        if in_top[a]:
            if l < 0 or lower[a] < lower[l]:
                l = a
        else:
            if u < 0 or upper[a] > upper[u]:
                u = a
    return l, u


@njit(cache=True)
def _lucb_tape(
    means, kappas, epsilon, k1, alpha, delta, tape, checkpoints, budget_cap, s_cp, n_cp
):
    k = means.shape[0]
    nb = kappas.shape[0]
    s = np.zeros(k)
    n = np.zeros(k, np.int64)
    lower = np.empty(k)
    upper = np.empty(k)
    n_checkpoints = checkpoints.shape[0]
    cp_idx = 0
    total = 0
    pos = 0

    if k > tape.shape[0]:
        return s, n, 0, 0, STATUS_TAPE
    for a in range(k):
        reward = 1.0 if tape[pos] < means[a] else 0.0
        pos += 1
        s[a] += reward
        n[a] += 1
        total += 1
        while cp_idx < n_checkpoints and total == checkpoints[cp_idx]:
            s_cp[cp_idx, :] = s
            n_cp[cp_idx, :] = n
            cp_idx += 1

    t = 1
    beta = beta_val(1.0, k1, k, alpha, delta)
    _refresh_bounds(s, n, beta, lower, upper)
    active = np.ones(nb, np.bool_)
    means_hat = s / n
    order = np.argsort(-means_hat, kind="mergesort")
    for b in range(nb):
        l, u = _critical_pair(lower, upper, order, kappas[b])
        if upper[u] - lower[l] < epsilon:
            active[b] = False

    status = STATUS_NATURAL
    while True:
        n_active = 0
        for b in range(nb):
            if active[b]:
                n_active += 1
        if n_active == 0:
            status = STATUS_NATURAL
            break
        cost = 2 * n_active
        if budget_cap > 0 and total + cost > budget_cap:
            status = STATUS_BUDGET
            break
        if pos + cost > tape.shape[0]:
            status = STATUS_TAPE
            break

        # choose every boundary's pair from the round-start bounds
        means_hat = s / n
        order = np.argsort(-means_hat, kind="mergesort")
        for b in range(nb):
            if not active[b]:
                continue
            l, u = _critical_pair(lower, upper, order, kappas[b])
            for step in range(2):
                arm = l if step == 0 else u
                reward = 1.0 if tape[pos] < means[arm] else 0.0
                pos += 1
                s[arm] += reward
                n[arm] += 1
                total += 1
                while cp_idx < n_checkpoints and total == checkpoints[cp_idx]:
                    s_cp[cp_idx, :] = s
                    n_cp[cp_idx, :] = n
                    cp_idx += 1

        t += 1
        beta = beta_val(float(t), k1, k, alpha, delta)
        _refresh_bounds(s, n, beta, lower, upper)
        means_hat = s / n
        order = np.argsort(-means_hat, kind="mergesort")
        for b in range(nb):
            if active[b]:
                l, u = _critical_pair(lower, upper, order, kappas[b])
                if upper[u] - lower[l] < epsilon:
                    active[b] = False

    while cp_idx < n_checkpoints:
        s_cp[cp_idx, :] = s
        n_cp[cp_idx, :] = n
        cp_idx += 1
    return s, n, t, total, status


@njit(cache=True)
def _ar_tape(
    means, boundaries, k1, alpha, delta, tape, checkpoints, budget_cap, s_cp, n_cp
):
    k = means.shape[0]
    c = boundaries.shape[0]
    s = np.zeros(k)
    n = np.zeros(k, np.int64)
    lower = np.empty(k)
    upper = np.empty(k)
    kappas0 = np.zeros(c + 1, np.int64)
    for i in range(c):
        kappas0[i + 1] = boundaries[i]
    n_checkpoints = checkpoints.shape[0]
    cp_idx = 0
    total = 0
    pos = 0

    if k > tape.shape[0]:
        return s, n, 0, 0, STATUS_TAPE
    for a in range(k):
        reward = 1.0 if tape[pos] < means[a] else 0.0
        pos += 1
        s[a] += reward
        n[a] += 1
        total += 1
        while cp_idx < n_checkpoints and total == checkpoints[cp_idx]:
            s_cp[cp_idx, :] = s
            n_cp[cp_idx, :] = n
            cp_idx += 1

    t = 1
    beta = beta_val(1.0, k1, k, alpha, delta)
    _refresh_bounds(s, n, beta, lower, upper)
    active = np.ones(k, np.bool_)
    settled = np.zeros(k, np.bool_)
    for a in range(k):
        above = 0
        below = 0
        for b in range(k):
            if b == a:
                continue
            if lower[b] > upper[a]:
                above += 1
            if upper[b] < lower[a]:
                below += 1
        for g in range(1, c + 1):
            if above >= kappas0[g - 1] and below >= k - kappas0[g]:
                settled[a] = True
                break
    for a in range(k):
        if settled[a]:
            active[a] = False

    status = STATUS_NATURAL
    while True:
        n_active = 0
        for a in range(k):
            if active[a]:
                n_active += 1
        if n_active == 0:
            status = STATUS_NATURAL
            break
        if budget_cap > 0 and total + n_active > budget_cap:
            status = STATUS_BUDGET
            break
        if pos + n_active > tape.shape[0]:
            status = STATUS_TAPE
            break

        for a in range(k):
            if not active[a]:
                continue
            reward = 1.0 if tape[pos] < means[a] else 0.0
            pos += 1
            s[a] += reward
            n[a] += 1
            total += 1
            while cp_idx < n_checkpoints and total == checkpoints[cp_idx]:
                s_cp[cp_idx, :] = s
                n_cp[cp_idx, :] = n
                cp_idx += 1

        t += 1
        beta = beta_val(float(t), k1, k, alpha, delta)
        for a in range(k):
            if active[a]:  # removed arms keep their frozen bounds
                p_hat = s[a] / n[a]
                lower[a] = klucb_lower_fast(p_hat, float(n[a]), beta)
                upper[a] = klucb_upper_fast(p_hat, float(n[a]), beta)

        for a in range(k):
            settled[a] = False
        for a in range(k):
            if not active[a]:
                continue
            above = 0
            below = 0
            for b in range(k):
                if b == a:
                    continue
                if lower[b] > upper[a]:
                    above += 1
                if upper[b] < lower[a]:
                    below += 1
            for g in range(1, c + 1):
                if above >= kappas0[g - 1] and below >= k - kappas0[g]:
                    settled[a] = True
                    break
        for a in range(k):
            if settled[a]:
                active[a] = False

    while cp_idx < n_checkpoints:
        s_cp[cp_idx, :] = s
        n_cp[cp_idx, :] = n
        cp_idx += 1
    return s, n, t, total, status


@njit(cache=True)
def _uniform_tape(means, tape, checkpoints, budget_cap, s_cp, n_cp):
    k = means.shape[0]
    s = np.zeros(k)
    n = np.zeros(k, np.int64)
    n_checkpoints = checkpoints.shape[0]
    cp_idx = 0
    total = 0
    pos = 0
    rounds = 0
    status = STATUS_BUDGET
    while True:
        if total + k > budget_cap:
            status = STATUS_BUDGET
            break
        if pos + k > tape.shape[0]:
            status = STATUS_TAPE
            break
        for a in range(k):
            reward = 1.0 if tape[pos] < means[a] else 0.0
            pos += 1
            s[a] += reward
            n[a] += 1
            total += 1
            while cp_idx < n_checkpoints and total == checkpoints[cp_idx]:
                s_cp[cp_idx, :] = s
                n_cp[cp_idx, :] = n
                cp_idx += 1
        rounds += 1
    while cp_idx < n_checkpoints:
        s_cp[cp_idx, :] = s
        n_cp[cp_idx, :] = n
        cp_idx += 1
    return s, n, rounds, total, status


@dataclass(frozen=True)
class SimResult:
    """Final tallies plus pull-exact checkpoint snapshots of one trial."""

    final_s: np.ndarray
    final_n: np.ndarray
    rounds: int
    total_pulls: int
    status: int
    checkpoint_s: np.ndarray  # (num checkpoints, K)
    checkpoint_n: np.ndarray

    @property
    def natural(self) -> bool:
        return self.status == STATUS_NATURAL


def _prep(means: Sequence[float], checkpoints: Sequence[int]) -> tuple:
    m = np.asarray(means, dtype=np.float64)
    cps = np.asarray(sorted(checkpoints), dtype=np.int64)
    if cps.size and (cps[0] < 1 or np.any(np.diff(cps) <= 0)):
        raise ValueError("checkpoints must be strictly increasing positive pulls")
    s_cp = np.zeros((cps.size, m.size))
    n_cp = np.zeros((cps.size, m.size), np.int64)
    return m, cps, s_cp, n_cp


def simulate_lucb(
    means: Sequence[float],
    spec: ClusterSpec,
    epsilon: float,
    schedule: ExplorationSchedule,
    tape: np.ndarray,
    checkpoints: Sequence[int] = (),
    budget_cap: Optional[int] = None,
) -> SimResult:
    m, cps, s_cp, n_cp = _prep(means, checkpoints)
    kappas = np.asarray(
        [spec.kappa(i) for i in spec.interior_boundaries()], dtype=np.int64
    )
    s, n, rounds, total, status = _lucb_tape(
        m, kappas, epsilon, schedule.k1, schedule.alpha, schedule.delta,
        tape, cps, budget_cap or 0, s_cp, n_cp,
    )
    return SimResult(s, n, rounds, total, status, s_cp, n_cp)


def simulate_active_ranking(
    means: Sequence[float],
    spec: ClusterSpec,
    schedule: ExplorationSchedule,
    tape: np.ndarray,
    checkpoints: Sequence[int] = (),
    budget_cap: Optional[int] = None,
) -> SimResult:
    m, cps, s_cp, n_cp = _prep(means, checkpoints)
    bounds = np.asarray(spec.boundaries, dtype=np.int64)
    s, n, rounds, total, status = _ar_tape(
        m, bounds, schedule.k1, schedule.alpha, schedule.delta,
        tape, cps, budget_cap or 0, s_cp, n_cp,
    )
    return SimResult(s, n, rounds, total, status, s_cp, n_cp)


def simulate_uniform(
    means: Sequence[float],
    spec: ClusterSpec,
    tape: np.ndarray,
    checkpoints: Sequence[int],
    budget_cap: int,
) -> SimResult:
    if spec.num_arms != len(means):
        raise ValueError("means length does not match cluster spec")
    m, cps, s_cp, n_cp = _prep(means, checkpoints)
    s, n, rounds, total, status = _uniform_tape(m, tape, cps, budget_cap, s_cp, n_cp)
    return SimResult(s, n, rounds, total, status, s_cp, n_cp)


def make_tape(master_seed: int, trial: int, length: int) -> np.ndarray:
    """The first ``length`` uniforms of this trial's stream. Streams are
    prefix-stable: a longer tape for the same (seed, trial) extends the
    shorter one, so retrying with more tape replays identical pulls."""
    return trial_rng(master_seed, trial).random(length)


def run_trial(
    algorithm: str,
    means: Sequence[float],
    spec: ClusterSpec,
    schedule: ExplorationSchedule,
    master_seed: int,
    trial: int,
    epsilon: float = 0.0,
    checkpoints: Sequence[int] = (),
    budget_cap: Optional[int] = None,
) -> SimResult:
    """One seeded trial of 'lucb', 'ar', or 'uniform', growing the tape as
    needed for uncapped self-stopping runs."""
    if algorithm == "uniform":
        if budget_cap is None:
            raise ValueError("uniform sampling needs a budget cap")
        tape = make_tape(master_seed, trial, budget_cap)
        return simulate_uniform(means, spec, tape, checkpoints, budget_cap)

    length = budget_cap if budget_cap is not None else _TAPE_START
    while True:
        tape = make_tape(master_seed, trial, length)
        if algorithm == "lucb":
            res = simulate_lucb(
                means, spec, epsilon, schedule, tape, checkpoints, budget_cap
            )
        elif algorithm == "ar":
            res = simulate_active_ranking(
                means, spec, schedule, tape, checkpoints, budget_cap
            )
        else:
            raise ValueError(f"unknown algorithm: {algorithm!r}")
        if res.status != STATUS_TAPE:
            return res
        length *= 2
        if length > _TAPE_MAX:
            raise RuntimeError(
                f"trial {trial} did not stop within {_TAPE_MAX} pulls"
            )
