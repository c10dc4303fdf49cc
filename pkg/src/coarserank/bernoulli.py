"""Bernoulli-KL numerics used throughout the package: divergence, confidence
bound inversion, Chernoff information, the exploration-rate schedule, and the
C0 constant solver.

All functions are pure; everything is safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import _kernels

_E = math.e


def kl_bernoulli(x: float, y: float) -> float:
    """Kullback-Leibler divergence d(x, y) between Bernoulli(x) and Bernoulli(y).

    Uses the convention 0*log(0) = 0, so ``x`` may sit on either endpoint.
    ``y`` on an endpoint is only accepted when ``x == y`` (the divergence is
    infinite otherwise); that case raises ValueError so callers that need
    +inf must handle it explicitly.
    """
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"x must be in [0, 1], got {x}")
    if not 0.0 <= y <= 1.0:
        raise ValueError(f"y must be in [0, 1], got {y}")
    if y == 0.0 or y == 1.0:
        if x == y:
            return 0.0
        raise ValueError(f"d({x}, {y}) is infinite: y on the boundary with x != y")
    if x == y:
        return 0.0
    return _kernels.kl_bern(x, y)


def kl_ucb_upper(p_hat: float, n: int, beta: float) -> float:
    """Upper confidence bound: max{q in [p_hat, 1] : n*d(p_hat, q) <= beta}.

    The bisection collapses to the exact float64 supremum of the feasible
    set, so n*d(p_hat, U) <= beta holds exactly and the inversion residual
    |n*d(p_hat, U) - beta| is bounded by the divergence's gap to the next
    representable float. Where that lattice gap exceeds 4e-10 the equation
    cannot be inverted at any representable point (this happens only within
    a sliver of 1, where the divergence's slope blows up), and the bound
    saturates to exactly 1.0; everywhere else a returned U < 1 certifies
    the residual. The saturation rule is monotone in beta.
    """
    _check_bound_args(p_hat, n, beta)
    u = _kernels.klucb_upper_bisect(p_hat, float(n), beta)
    if beta > 0.0 and u < 1.0:
        up = math.nextafter(u, 1.0)
        kl_up = _kernels.kl_bern(p_hat, up) if up < 1.0 else math.inf
        if n * (kl_up - _kernels.kl_bern(p_hat, u)) > 4e-10:
            return 1.0
    return u


def kl_ucb_lower(p_hat: float, n: int, beta: float) -> float:
    """Lower confidence bound: min{q in [0, p_hat] : n*d(p_hat, q) <= beta}.

    Exact complement of ``kl_ucb_upper`` (so the two saturate in mirrored
    unison, to 0.0 here), with a final nudge repairing the one-ulp rounding
    the complement map can introduce so that n*d(p_hat, L) <= beta holds
    exactly whenever L > 0.
    """
    _check_bound_args(p_hat, n, beta)
    if p_hat <= 0.0:
        return 0.0
    if beta <= 0.0:
        return p_hat
    lo = 1.0 - kl_ucb_upper(1.0 - p_hat, n, beta)
    if lo > p_hat:
        lo = p_hat
    while 0.0 < lo < p_hat and n * _kernels.kl_bern(p_hat, lo) > beta:
        lo = math.nextafter(lo, p_hat)
    if lo < 0.0:
        lo = 0.0
    return lo


def _check_bound_args(p_hat: float, n: int, beta: float) -> None:
    if not 0.0 <= p_hat <= 1.0:
        raise ValueError(f"p_hat must be in [0, 1], got {p_hat}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if beta < 0.0:
        raise ValueError(f"beta must be >= 0, got {beta}")


def chernoff_information(x: float, y: float) -> float:
    """Chernoff information d*(x, y): the common value d(z*, x) = d(z*, y).

    z* is the unique point between x and y where the two divergences
    equalize; it is found by bisection (see ``chernoff_point``). Exactly
    symmetric in its arguments; zero iff x == y.
    """
    _check_interior(x, "x")
    _check_interior(y, "y")
    value, _ = _kernels.chernoff_root(x, y)
    return value


def chernoff_point(x: float, y: float) -> float:
    """The equalizing point z* for ``chernoff_information(x, y)``."""
    _check_interior(x, "x")
    _check_interior(y, "y")
    _, z = _kernels.chernoff_root(x, y)
    return z


def _check_interior(v: float, name: str) -> None:
    if not 0.0 < v < 1.0:
        raise ValueError(f"{name} must be strictly inside (0, 1), got {v}")


def beta_value(t: int, k1: float, num_arms: int, alpha: float, delta: float) -> float:
    """Raw exploration rate ln(A) + ln(ln(A)) with A = k1*K*t^alpha/delta.

    No constraint is placed on ``k1`` here beyond A > e (needed for the
    outer logarithm); ``exploration_rate`` applies the schedule's invariants.
    """
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    a = math.log(k1 * num_arms * float(t) ** alpha / delta)
    if a <= 1.0:
        raise ValueError("k1*K*t^alpha/delta must exceed e for the log-log term")
    return a + math.log(a)


def min_k1(alpha: float, num_clusters: int) -> float:
    """Smallest admissible k1 for a schedule with the given alpha and c."""
    if alpha <= 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    if num_clusters < 2:
        raise ValueError(f"need at least 2 clusters, got {num_clusters}")
    return (
        ((num_clusters - 1) / 2.0) ** alpha
        + 2.0 * _E / (alpha - 1.0)
        + 4.0 * _E / (alpha - 1.0) ** 2
    )


@dataclass(frozen=True)
class ExplorationSchedule:
    """Parameters (k1, alpha, delta) driving the confidence-bound budget.

    The constructor rejects k1 at or below
    ((c-1)/2)^alpha + 2e/(alpha-1) + 4e/(alpha-1)^2, the admissibility
    floor for the correctness guarantee.
    """

    k1: float
    alpha: float
    delta: float
    num_arms: int
    num_clusters: int

    def __post_init__(self) -> None:
        if self.alpha <= 1.0:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.num_arms < 2:
            raise ValueError(f"need at least 2 arms, got {self.num_arms}")
        if self.num_clusters < 2:
            raise ValueError(f"need at least 2 clusters, got {self.num_clusters}")
        floor = min_k1(self.alpha, self.num_clusters)
        if self.k1 <= floor:
            raise ValueError(
                f"k1 = {self.k1} is too small; the schedule requires k1 > {floor}"
            )

    @classmethod
    def default_for(
        cls,
        delta: float,
        num_arms: int,
        num_clusters: int,
        alpha: float = 1.1,
    ) -> "ExplorationSchedule":
        """Schedule with k1 set to 1.01x the admissibility floor."""
        return cls(
            k1=1.01 * min_k1(alpha, num_clusters),
            alpha=alpha,
            delta=delta,
            num_arms=num_arms,
            num_clusters=num_clusters,
        )

    def beta(self, t: int) -> float:
        return exploration_rate(t, self)


def exploration_rate(t: int, schedule: ExplorationSchedule) -> float:
    """Exploration rate beta(t, delta) for a validated schedule.

    Strictly increasing in t.
    """
    return beta_value(
        t, schedule.k1, schedule.num_arms, schedule.alpha, schedule.delta
    )


def solve_c0(alpha: float) -> float:
    """Smallest C0 >= 1 with C0 >= (1 + 1/e) * (alpha*ln(C0) + 1 + alpha/e).

    Found by fixed-point iteration of the right-hand side starting from e;
    the iteration increases monotonically to the fixed point, and the result
    is padded by 1e-10 so the returned value satisfies the inequality.
    """
    if alpha <= 1.0:
        raise ValueError(f"alpha must exceed 1, got {alpha}")

    def rhs(c: float) -> float:
        return (1.0 + 1.0 / _E) * (alpha * math.log(c) + 1.0 + alpha / _E)

    c = _E
    for _ in range(100_000):
        nxt = rhs(c)
        if abs(nxt - c) < 1e-13:
            c = nxt
            break
        c = nxt
    c += 1e-10
    while c < rhs(c):
        c = rhs(c) + 1e-10
    return c
