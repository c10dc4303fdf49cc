"""Evaluation functions: exact-cluster mistakes, tolerance-aware clustering
success, Kendall tau inversion fraction, and the inter-/intra-cluster
inversion split.

All functions are pure. Rankings use the engine convention: ``sigma[arm]``
is the 1-based rank the algorithm assigned to that arm.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

from .engine import ClusterSpec, CoarseRanking


@dataclass(frozen=True)
class EvalContext:
    """Ground truth for scoring one instance: the true means (any arm
    order), the target cluster sizes, and the tolerance."""

    means: tuple[float, ...]
    spec: ClusterSpec
    epsilon: float = 0.0

    def __post_init__(self) -> None:
        if len(self.means) != self.spec.num_arms:
            raise ValueError(
                f"{len(self.means)} means for a {self.spec.num_arms}-arm cluster spec"
            )
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be nonnegative")

    @cached_property
    def true_order(self) -> tuple[int, ...]:
        """Arm ids from best to worst true mean (ties broken by lower id)."""
        return tuple(
            sorted(range(len(self.means)), key=lambda a: (-self.means[a], a))
        )

    @cached_property
    def true_clusters(self) -> tuple[frozenset[int], ...]:
        cuts = (0,) + self.spec.boundaries
        return tuple(
            frozenset(self.true_order[cuts[i] : cuts[i + 1]])
            for i in range(self.spec.num_clusters)
        )

    @cached_property
    def cluster_of(self) -> tuple[int, ...]:
        """0-based true cluster index of each arm."""
        out = [0] * len(self.means)
        for g, members in enumerate(self.true_clusters):
            for a in members:
                out[a] = g
        return tuple(out)


def cluster_mistake(result: CoarseRanking, ctx: EvalContext) -> bool:
    """True iff any returned cluster differs from the true cluster as a set
    (permutations inside a cluster are not mistakes; tolerance is ignored)."""
    if len(result.clusters) != len(ctx.true_clusters):
        raise ValueError("cluster counts differ between result and context")
    return result.clusters != ctx.true_clusters


def pac_violation(result: CoarseRanking, ctx: EvalContext) -> bool:
    """True iff some returned cluster contains an arm whose true mean falls
    outside that cluster's tolerance-inflated band.

    Cluster ``i`` (1-based) tolerates arms with mean in
    ``[p_(kappa_i) - eps, p_(kappa_{i-1}+1) + eps]`` where ``p_(r)`` is the
    r-th largest true mean.
    """
    if len(result.clusters) != len(ctx.true_clusters):
        raise ValueError("cluster counts differ between result and context")
    sorted_means = [ctx.means[a] for a in ctx.true_order]
    cuts = (0,) + ctx.spec.boundaries
    eps = ctx.epsilon
    for i in range(ctx.spec.num_clusters):
        hi = sorted_means[cuts[i]] + eps  # best mean in true cluster i+1
        lo = sorted_means[cuts[i + 1] - 1] - eps  # worst mean in true cluster i+1
        for a in result.clusters[i]:
            if not lo <= ctx.means[a] <= hi:
                return True
    return False


def _merge_count(seq: list[int]) -> int:
    """Number of inversions in ``seq``, via merge sort."""
    n = len(seq)
    if n < 2:
        return 0
    work = list(seq)
    buf = [0] * n
    count = 0
    width = 1
    while width < n:
        for lo in range(0, n - width, 2 * width):
            mid = lo + width
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if work[i] <= work[j]:
                    buf[k] = work[i]
                    i += 1
                else:
                    buf[k] = work[j]
                    j += 1
                    count += mid - i
                k += 1
            buf[k:hi] = work[i:mid] if i < mid else work[j:hi]
            work[lo:hi] = buf[lo:hi]
        width *= 2
    return count


def _check_permutation(sigma: Sequence[int]) -> None:
    if sorted(sigma) != list(range(1, len(sigma) + 1)):
        raise ValueError("sigma must assign each rank 1..K exactly once")


def kendall_tau_fraction(sigma: Sequence[int], true_order: Sequence[int]) -> float:
    """Fraction of item pairs the ranking orders opposite to the truth.

    ``sigma[arm]`` is the assigned 1-based rank; ``true_order`` lists arm
    ids from best to worst. Returns inversions / (K(K-1)/2).
    """
    _check_permutation(sigma)
    if sorted(true_order) != list(range(len(sigma))):
        raise ValueError("true_order must list each arm id exactly once")
    k = len(sigma)
    if k < 2:
        return 0.0
    ranks_in_true_order = [sigma[a] for a in true_order]
    return _merge_count(ranks_in_true_order) / (k * (k - 1) / 2)


def inversion_decomposition(
    sigma: Sequence[int], ctx: EvalContext
) -> tuple[int, int]:
    """(inter, intra): inverted pairs split by whether the two arms belong
    to different true clusters. The two counts sum to the total number of
    inversions in ``sigma``."""
    _check_permutation(sigma)
    if len(sigma) != len(ctx.means):
        raise ValueError("sigma length does not match context")
    ranks_in_true_order = [sigma[a] for a in ctx.true_order]
    total = _merge_count(ranks_in_true_order)
    intra = 0
    cuts = (0,) + ctx.spec.boundaries
    for i in range(ctx.spec.num_clusters):
        intra += _merge_count(ranks_in_true_order[cuts[i] : cuts[i + 1]])
    return total - intra, intra
