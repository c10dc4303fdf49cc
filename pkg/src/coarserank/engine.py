"""The adaptive coarse-ranking engine.

Each round the engine looks at every still-active cluster boundary, samples
the two arms most likely to be misclassified there (the in-set arm with the
weakest lower bound and the out-of-set arm with the strongest upper bound),
refreshes all confidence bounds, and retires boundaries whose critical
interval overlap has dropped below the tolerance. States are values: every
operation returns a new state and never mutates its input.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Iterable, Optional, Sequence

from . import _kernels
from .bernoulli import ExplorationSchedule

Sampler = Callable[[int], float]


@dataclass(frozen=True)
class ClusterSpec:
    """Target partition sizes, given as cumulative rank boundaries.

    ``boundaries`` is the strictly increasing sequence kappa_1 < ... <
    kappa_c with kappa_c equal to the number of arms; cluster i collects the
    arms ranked in positions (kappa_{i-1}, kappa_i].
    """

    boundaries: tuple[int, ...]
    num_arms: int

    def __post_init__(self) -> None:
        ks = self.boundaries
        if len(ks) < 2:
            raise ValueError("need at least 2 clusters")
        if ks[0] < 1:
            raise ValueError(f"first boundary must be >= 1, got {ks[0]}")
        if any(b >= a for a, b in zip(ks[1:], ks)):
            raise ValueError(f"boundaries must be strictly increasing: {ks}")
        if ks[-1] != self.num_arms:
            raise ValueError(
                f"last boundary must equal the number of arms "
                f"({self.num_arms}), got {ks[-1]}"
            )

    @property
    def num_clusters(self) -> int:
        return len(self.boundaries)

    @property
    def cluster_sizes(self) -> tuple[int, ...]:
        prev = 0
        sizes = []
        for k in self.boundaries:
            sizes.append(k - prev)
            prev = k
        return tuple(sizes)

    def interior_boundaries(self) -> range:
        """Indices 1..c-1 of the boundaries that actually separate clusters."""
        return range(1, self.num_clusters)

    def kappa(self, i: int) -> int:
        """The rank count kappa_i for a 1-based boundary/cluster index."""
        return self.boundaries[i - 1]


@dataclass(frozen=True)
class ArmStats:
    pulls: int
    reward_sum: float
    mean_hat: float
    lower: float
    upper: float


@dataclass(frozen=True)
class EngineState:
    t: int
    arms: tuple[ArmStats, ...]
    active: frozenset[int]
    epsilon: float
    schedule: ExplorationSchedule
    spec: ClusterSpec

    @property
    def finished(self) -> bool:
        return not self.active

    @property
    def total_pulls(self) -> int:
        return sum(a.pulls for a in self.arms)


@dataclass(frozen=True)
class CoarseRanking:
    """sigma[a] is the 1-based rank of arm a (rank 1 = highest empirical
    mean); clusters[i] is the frozenset of arms occupying rank positions
    (kappa_i, kappa_{i+1}]."""

    sigma: tuple[int, ...]
    clusters: tuple[frozenset[int], ...]

    @property
    def order(self) -> tuple[int, ...]:
        """Arm ids from best rank to worst."""
        out = [0] * len(self.sigma)
        for arm, rank in enumerate(self.sigma):
            out[rank - 1] = arm
        return tuple(out)


@dataclass(frozen=True)
class RunResult:
    ranking: CoarseRanking
    total_samples: int
    pulls: tuple[int, ...]
    natural: bool
    state: EngineState


def _beta(t: int, schedule: ExplorationSchedule) -> float:
    return _kernels.beta_val(
        float(t), schedule.k1, schedule.num_arms, schedule.alpha, schedule.delta
    )


def _make_arm(pulls: int, reward_sum: float, beta: float) -> ArmStats:
    p_hat = reward_sum / pulls
    return ArmStats(
        pulls=pulls,
        reward_sum=reward_sum,
        mean_hat=p_hat,
        lower=_kernels.klucb_lower_fast(p_hat, float(pulls), beta),
        upper=_kernels.klucb_upper_fast(p_hat, float(pulls), beta),
    )


def _sorted_by_mean(arms: Sequence[ArmStats]) -> list[int]:
    """Arm ids by decreasing empirical mean, ties broken by lowest id."""
    return sorted(range(len(arms)), key=lambda a: (-arms[a].mean_hat, a))


def _critical_pair(arms: Sequence[ArmStats], order: Sequence[int], kappa: int):
    in_top = [False] * len(arms)
    for a in order[:kappa]:
        in_top[a] = True
    l = -1
    u = -1
    for a in range(len(arms)):
        if in_top[a]:
            if l < 0 or arms[a].lower < arms[l].lower:
                l = a
        else:
            if u < 0 or arms[a].upper > arms[u].upper:
                u = a
    return l, u


def _eliminate(
    arms: Sequence[ArmStats],
    active: Iterable[int],
    spec: ClusterSpec,
    epsilon: float,
) -> frozenset[int]:
    order = _sorted_by_mean(arms)
    kept = []
    for i in sorted(active):
        l, u = _critical_pair(arms, order, spec.kappa(i))
        if not arms[u].upper - arms[l].lower < epsilon:
            kept.append(i)
    return frozenset(kept)


def _check_reward(r: float) -> float:
    if not 0.0 <= r <= 1.0:
        raise ValueError(f"reward must lie in [0, 1], got {r}")
    return float(r)


def init(
    spec: ClusterSpec,
    epsilon: float,
    schedule: ExplorationSchedule,
    first_rewards: Sequence[float],
) -> EngineState:
    """Start an engine from one reward per arm.

    Bounds are computed at round t=1 and any boundary whose critical overlap
    already clears the tolerance is retired immediately.
    """
    if schedule.num_arms != spec.num_arms or schedule.num_clusters != spec.num_clusters:
        raise ValueError("schedule and cluster spec disagree on problem shape")
    if len(first_rewards) != spec.num_arms:
        raise ValueError(
            f"need exactly {spec.num_arms} initial rewards, got {len(first_rewards)}"
        )
    if epsilon < 0.0:
        raise ValueError(f"epsilon must be >= 0, got {epsilon}")
    rewards = [_check_reward(r) for r in first_rewards]
    beta = _beta(1, schedule)
    arms = tuple(_make_arm(1, r, beta) for r in rewards)
    active = _eliminate(arms, spec.interior_boundaries(), spec, epsilon)
    return EngineState(
        t=1, arms=arms, active=active, epsilon=epsilon, schedule=schedule, spec=spec
    )


def critical_arms(state: EngineState, i: int) -> tuple[int, int]:
    """The pair to sample at active boundary i: (weakest lower bound inside
    the top-kappa_i set, strongest upper bound outside it)."""
    if i not in state.active:
        raise ValueError(f"boundary {i} is not active")
    order = _sorted_by_mean(state.arms)
    return _critical_pair(state.arms, order, state.spec.kappa(i))


def step(state: EngineState, sampler: Sampler) -> EngineState:
    """Play one round: sample both critical arms at every active boundary,
    advance t, refresh every bound, and retire settled boundaries.

    The arms sampled are chosen from the bounds as they stood at the start
    of the round; the retirement test reuses the freshly updated bounds.
    """
    if not state.active:
        raise ValueError("engine already terminated (no active boundaries)")
    order = _sorted_by_mean(state.arms)
    draws: list[tuple[int, float]] = []
    for i in sorted(state.active):
        l, u = _critical_pair(state.arms, order, state.spec.kappa(i))
        draws.append((l, _check_reward(sampler(l))))
        draws.append((u, _check_reward(sampler(u))))

    pulls = [a.pulls for a in state.arms]
    sums = [a.reward_sum for a in state.arms]
    for arm, reward in draws:
        pulls[arm] += 1
        sums[arm] += reward

    t = state.t + 1
    beta = _beta(t, state.schedule)
    arms = tuple(_make_arm(n, s, beta) for n, s in zip(pulls, sums))
    active = _eliminate(arms, state.active, state.spec, state.epsilon)
    return replace(state, t=t, arms=arms, active=active)


def result(state: EngineState) -> CoarseRanking:
    """Anytime coarse ranking: arms sorted by decreasing empirical mean
    (ties to the lowest id), cut into clusters at the spec boundaries."""
    order = _sorted_by_mean(state.arms)
    sigma = [0] * len(order)
    for pos, arm in enumerate(order):
        sigma[arm] = pos + 1
    clusters = []
    prev = 0
    for k in state.spec.boundaries:
        clusters.append(frozenset(order[prev:k]))
        prev = k
    return CoarseRanking(sigma=tuple(sigma), clusters=tuple(clusters))


def run_to_completion(
    spec: ClusterSpec,
    epsilon: float,
    schedule: ExplorationSchedule,
    sampler: Sampler,
    budget_cap: Optional[int] = None,
) -> RunResult:
    """Drive the engine until every boundary settles or the budget runs out.

    The cap counts individual samples, initialization included; a round is
    only started if it fits. ``natural`` reports whether the run stopped on
    its own rather than by exhausting the cap.
    """
    if budget_cap is not None and budget_cap < spec.num_arms:
        raise ValueError("budget_cap must cover at least one sample per arm")
    state = init(
        spec, epsilon, schedule, [sampler(a) for a in range(spec.num_arms)]
    )
    total = spec.num_arms
    while state.active:
        cost = 2 * len(state.active)
        if budget_cap is not None and total + cost > budget_cap:
            break
        state = step(state, sampler)
        total += cost
    return RunResult(
        ranking=result(state),
        total_samples=total,
        pulls=tuple(a.pulls for a in state.arms),
        natural=not state.active,
        state=state,
    )


def state_to_dict(state: EngineState) -> dict:
    """Self-describing plain-data form of an engine state (JSON-friendly)."""
    return {
        "kind": "engine_state",
        "t": state.t,
        "epsilon": state.epsilon,
        "active": sorted(state.active),
        "spec": {
            "boundaries": list(state.spec.boundaries),
            "num_arms": state.spec.num_arms,
        },
        "schedule": {
            "k1": state.schedule.k1,
            "alpha": state.schedule.alpha,
            "delta": state.schedule.delta,
            "num_arms": state.schedule.num_arms,
            "num_clusters": state.schedule.num_clusters,
        },
        "arms": [
            {
                "pulls": a.pulls,
                "reward_sum": a.reward_sum,
                "mean_hat": a.mean_hat,
                "lower": a.lower,
                "upper": a.upper,
            }
            for a in state.arms
        ],
    }


def state_from_dict(data: dict) -> EngineState:
    if data.get("kind") != "engine_state":
        raise ValueError("not a serialized engine state")
    spec = ClusterSpec(
        boundaries=tuple(data["spec"]["boundaries"]),
        num_arms=data["spec"]["num_arms"],
    )
    sched = ExplorationSchedule(**data["schedule"])
    arms = tuple(
        ArmStats(
            pulls=a["pulls"],
            reward_sum=a["reward_sum"],
            mean_hat=a["mean_hat"],
            lower=a["lower"],
            upper=a["upper"],
        )
        for a in data["arms"]
    )
    return EngineState(
        t=data["t"],
        arms=arms,
        active=frozenset(data["active"]),
        epsilon=data["epsilon"],
        schedule=sched,
        spec=spec,
    )
