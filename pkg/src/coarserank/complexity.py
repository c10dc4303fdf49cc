"""Sample-complexity analysis for coarse ranking instances.

Computes, for an instance with sorted means and a cluster specification:

* per-arm Chernoff distances to the nearest cluster-gap anchor,
* the hardness sum H* (tolerance-capped inverse distances) and its
  minimum over admissible anchor placements,
* the resulting high-probability upper bound on total samples, and
* per-arm KL distances to adjacent-cluster arms with the matching
  information-theoretic lower bound on expected samples.

Everything here is pure analysis; nothing draws samples.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

from .bernoulli import (
    ExplorationSchedule,
    chernoff_information,
    kl_bernoulli,
    solve_c0,
)
from .engine import ClusterSpec

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class InfiniteComplexityError(ValueError):
    """Zero distance with zero tolerance: the hardness sum diverges."""


@dataclass(frozen=True)
class BoundaryAnchors:
    """One reference point per interior cluster boundary.

    Anchor i must lie in the closed interval between the worst mean of
    cluster i and the best mean of cluster i+1.
    """

    values: tuple[float, ...]

    @classmethod
    def midpoints(cls, sorted_means: tuple[float, ...], spec: ClusterSpec) -> BoundaryAnchors:
        vals = tuple(
            0.5 * (sorted_means[k - 1] + sorted_means[k])
            for k in _interior_kappas(spec)
        )
        return cls(values=vals)


def _interior_kappas(spec: ClusterSpec) -> list[int]:
    """Cumulative sizes kappa_1..kappa_{c-1} of the separating boundaries."""
    return [spec.kappa(i) for i in spec.interior_boundaries()]


def _check_sorted_interior(means: tuple[float, ...]) -> None:
    if any(not 0.0 < p < 1.0 for p in means):
        raise ValueError("means must lie strictly inside (0, 1)")
    if any(means[i] < means[i + 1] for i in range(len(means) - 1)):
        raise ValueError("means must be sorted in decreasing order")


def _check_anchors(
    anchors: BoundaryAnchors, means: tuple[float, ...], spec: ClusterSpec
) -> None:
    interior = _interior_kappas(spec)
    if len(anchors.values) != len(interior):
        raise ValueError(
            f"{len(anchors.values)} anchors for {len(interior)} interior boundaries"
        )
    for b, k in zip(anchors.values, interior):
        if not means[k] <= b <= means[k - 1]:
            raise ValueError(
                f"anchor {b} outside [{means[k]}, {means[k - 1]}] at boundary {k}"
            )


def _cluster_index(pos: int, spec: ClusterSpec) -> int:
    """0-based cluster of the arm at sorted position ``pos`` (0-based)."""
    for i, kappa in enumerate(spec.boundaries):
        if pos < kappa:
            return i
    raise ValueError(f"position {pos} outside the cluster spec")


def delta_star(
    means: tuple[float, ...], spec: ClusterSpec, anchors: BoundaryAnchors
) -> tuple[float, ...]:
    """Chernoff distance from each arm to its nearest boundary anchor.

    Arms in the top (bottom) cluster see only the first (last) anchor;
    arms in middle clusters take the smaller of the two flanking anchors.
    An anchor equal to an arm's mean gives distance 0 (the hardness sum
    guards that case with its tolerance cap).
    """
    _check_sorted_interior(means)
    if len(means) != spec.num_arms:
        raise ValueError("means length does not match cluster spec")
    _check_anchors(anchors, means, spec)
    b = anchors.values
    out = []
    for pos, p in enumerate(means):
        g = _cluster_index(pos, spec)
        if g == 0:
            val = chernoff_information(p, b[0])
        elif g == spec.num_clusters - 1:
            val = chernoff_information(p, b[-1])
        else:
            val = min(
                chernoff_information(p, b[g - 1]), chernoff_information(p, b[g])
            )
        out.append(val)
    return tuple(out)


def h_star(delta_values: tuple[float, ...], epsilon: float) -> float:
    """Hardness sum: sum of 1/max(distance, eps^2/2) over arms."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be nonnegative")
    floor = epsilon * epsilon / 2.0
    if floor == 0.0 and any(d <= 0.0 for d in delta_values):
        raise InfiniteComplexityError(
            "an arm sits exactly on an anchor and epsilon is 0"
        )
    return sum(1.0 / max(d, floor) for d in delta_values)


def _golden_section(
    f: Callable[[float], float], lo: float, hi: float, tol: float = 1e-10
) -> tuple[float, float]:
    """Minimize ``f`` on [lo, hi]; returns (argmin, min)."""
    a, b = lo, hi
    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    return x, f(x)


def optimize_anchors(
    means: tuple[float, ...], spec: ClusterSpec, epsilon: float
) -> tuple[BoundaryAnchors, float]:
    """Anchor placement minimizing the hardness sum.

    Coordinate descent over the anchors, one golden-section line search per
    coordinate (each anchor only moves within its own boundary gap), swept
    until the sum stops improving by more than 1e-12.
    """
    _check_sorted_interior(means)
    if len(means) != spec.num_arms:
        raise ValueError("means length does not match cluster spec")
    interior = _interior_kappas(spec)
    current = list(BoundaryAnchors.midpoints(means, spec).values)

    def objective() -> float:
        return h_star(delta_star(means, spec, BoundaryAnchors(tuple(current))), epsilon)

    best = objective()
    for _ in range(100):
        previous = best
        for idx, k in enumerate(interior):
            lo, hi = means[k], means[k - 1]
            if hi - lo <= 0.0:
                continue

            def along(b: float, idx: int = idx) -> float:
                saved = current[idx]
                current[idx] = b
                try:
                    return objective()
                finally:
                    current[idx] = saved

            x, fx = _golden_section(along, lo, hi)
            if fx < best:
                current[idx] = x
                best = fx
        if previous - best < 1e-12:
            break
    return BoundaryAnchors(tuple(current)), best


def upper_sample_bound(h_value: float, schedule: ExplorationSchedule) -> float:
    """High-probability upper bound on total samples:
    2*C0(alpha)*H* * ln(k1*K*(2H*)^alpha / delta)."""
    if not math.isfinite(h_value) or h_value <= 0.0:
        raise ValueError(f"hardness sum must be finite and positive, got {h_value}")
    c0 = solve_c0(schedule.alpha)
    inside = (
        schedule.k1
        * schedule.num_arms
        * (2.0 * h_value) ** schedule.alpha
        / schedule.delta
    )
    return 2.0 * c0 * h_value * math.log(inside)


def delta_kl_and_lower_bound(
    means: tuple[float, ...], spec: ClusterSpec, delta: float
) -> tuple[tuple[float, ...], float]:
    """Per-arm KL distance to the closest arm in an adjacent cluster, and
    the matching lower bound on any algorithm's expected sample count:
    (sum of inverse distances) * ln(1/(2.4*delta)).

    Unlike :func:`delta_star`, distances here reference actual adjacent
    *arms* (the worst of the previous cluster / best of the next), not gap
    anchors, so strict separation at every boundary is required.
    """
    _check_sorted_interior(means)
    if len(means) != spec.num_arms:
        raise ValueError("means length does not match cluster spec")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    for k in _interior_kappas(spec):
        if not means[k - 1] > means[k]:
            raise ValueError(
                f"boundary at {k} is not strictly separated "
                f"({means[k - 1]} vs {means[k]})"
            )
    if delta > 0.15:
        warnings.warn(
            "the lower-bound constant is only established for delta <= 0.15; "
            "computing anyway",
            stacklevel=2,
        )
    kappa = spec.boundaries
    out = []
    for pos, p in enumerate(means):
        g = _cluster_index(pos, spec)
        if g == 0:
            val = kl_bernoulli(p, means[kappa[0]])  # best arm of cluster 2
        elif g == spec.num_clusters - 1:
            val = kl_bernoulli(p, means[kappa[g - 1] - 1])  # worst arm above
        else:
            val = min(
                kl_bernoulli(p, means[kappa[g - 1] - 1]),
                kl_bernoulli(p, means[kappa[g]]),
            )
        out.append(val)
    bound = sum(1.0 / v for v in out) * math.log(1.0 / (2.4 * delta))
    return tuple(out), bound


@dataclass(frozen=True)
class ComplexityReport:
    """Every sample-complexity quantity for one instance, in sorted-arm
    order (``arm_order`` maps sorted positions back to input arm ids)."""

    sorted_means: tuple[float, ...]
    arm_order: tuple[int, ...]
    boundaries: tuple[int, ...]
    epsilon: float
    delta: float
    anchors: tuple[float, ...]
    delta_star_values: tuple[float, ...]
    delta_kl_values: tuple[float, ...]
    h_star_midpoint: float
    h_star_optimized: float
    upper_bound: float
    lower_bound: float
    c0_alpha: float
    bounds_ordered: bool = field(init=False)

    def __post_init__(self) -> None:
        ordered = (
            not math.isfinite(self.upper_bound)
            or not math.isfinite(self.lower_bound)
            or self.lower_bound <= self.upper_bound
        )
        object.__setattr__(self, "bounds_ordered", ordered)

    def to_dict(self) -> dict:
        return {
            "sorted_means": list(self.sorted_means),
            "arm_order": list(self.arm_order),
            "boundaries": list(self.boundaries),
            "epsilon": self.epsilon,
            "delta": self.delta,
            "anchors": list(self.anchors),
            "delta_star": list(self.delta_star_values),
            "delta_kl": list(self.delta_kl_values),
            "h_star_midpoint": self.h_star_midpoint,
            "h_star_optimized": self.h_star_optimized,
            "upper_bound": self.upper_bound,
            "lower_bound": self.lower_bound,
            "c0_alpha": self.c0_alpha,
            "bounds_ordered": self.bounds_ordered,
        }


def analyze(
    means: tuple[float, ...],
    spec: ClusterSpec,
    epsilon: float,
    schedule: Optional[ExplorationSchedule] = None,
    delta: float = 0.1,
) -> ComplexityReport:
    """Full analysis of one instance. ``means`` may arrive in any order;
    they are sorted internally and the permutation is reported."""
    order = tuple(sorted(range(len(means)), key=lambda a: (-means[a], a)))
    sorted_means = tuple(means[a] for a in order)
    if schedule is None:
        schedule = ExplorationSchedule.default_for(
            delta=delta, num_arms=spec.num_arms, num_clusters=spec.num_clusters
        )
    mid = BoundaryAnchors.midpoints(sorted_means, spec)
    h_mid = h_star(delta_star(sorted_means, spec, mid), epsilon)
    best_anchors, h_opt = optimize_anchors(sorted_means, spec, epsilon)
    ds = delta_star(sorted_means, spec, best_anchors)
    dkl, lower = delta_kl_and_lower_bound(sorted_means, spec, schedule.delta)
    upper = upper_sample_bound(h_opt, schedule)
    return ComplexityReport(
        sorted_means=sorted_means,
        arm_order=order,
        boundaries=spec.boundaries,
        epsilon=epsilon,
        delta=schedule.delta,
        anchors=best_anchors.values,
        delta_star_values=ds,
        delta_kl_values=dkl,
        h_star_midpoint=h_mid,
        h_star_optimized=h_opt,
        upper_bound=upper,
        lower_bound=lower,
        c0_alpha=solve_c0(schedule.alpha),
    )
