"""Jit-compiled scalar kernels shared by the engine, baselines, and simulators.

These implement the same quantities as the public ``bernoulli`` module. The
reference engine and the Monte Carlo simulators both call the functions here,
so the interpreted and compiled paths produce bit-identical trajectories.
"""

from __future__ import annotations

import math

from numba import njit

#: largest float64 strictly below 1.0
ONE_MINUS = 1.0 - 2.0 ** -53


@njit(cache=True)
def kl_bern(x, y):
    """d(x, y) for y strictly inside (0, 1); x may touch the endpoints.

    Near the diagonal the two log terms cancel to O((y-x)^2), so a
    log1p-based form is used there to keep the result (and its sign)
    accurate; the plain form would drown in rounding noise for
    |y - x| < ~1e-8 and break the bound inversions at tiny budgets.
    """
    u = y - x
    if 0.0 < x < 1.0:
        au = abs(u)
        if au < 0.5 * x and au < 0.5 * (1.0 - x):
            return -x * math.log1p(u / x) - (1.0 - x) * math.log1p(-u / (1.0 - x))
    v = 0.0
    if x > 0.0:
        v += x * math.log(x / y)
    if x < 1.0:
        v += (1.0 - x) * math.log((1.0 - x) / (1.0 - y))
    return v


@njit(cache=True)
def klucb_upper_bisect(p_hat, n, beta):
    """max{q in [p_hat, 1) : n*d(p_hat, q) <= beta} on the float64 lattice.

    The bisection runs until the bracket collapses to adjacent floats, so
    the returned point is the exact largest representable q satisfying the
    budget; n*d(p_hat, result) <= beta holds exactly in float arithmetic.
    The iteration cap covers the worst case of a root deep in the
    subnormal range (value bisection crosses one binade per step there).
    """
    if p_hat >= 1.0:
        return 1.0
    if beta <= 0.0:
        return p_hat
    lo = p_hat
    hi = 1.0
    for _ in range(1200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if n * kl_bern(p_hat, mid) <= beta:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def klucb_lower_bisect(p_hat, n, beta):
    """min{q in (0, p_hat] : n*d(p_hat, q) <= beta} on the float64 lattice.

    Mirror of ``klucb_upper_bisect``: collapses to adjacent floats and
    returns the exact smallest representable q satisfying the budget.
    """
    if p_hat <= 0.0:
        return 0.0
    if beta <= 0.0:
        return p_hat
    lo = 0.0
    hi = p_hat
    for _ in range(1200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if n * kl_bern(p_hat, mid) <= beta:
            hi = mid
        else:
            lo = mid
    return hi


@njit(cache=True)
def klucb_upper_fast(p_hat, n, beta):
    """Same quantity as ``klucb_upper_bisect`` via bracket-safeguarded Newton.

    The divergence is convex and increasing in q on [p_hat, 1), so a Newton
    step from any point lands at or above the root; iterates descend to it
    monotonically. Used on hot paths; agrees with the bisection form to
    better than 1e-12 and always returns a feasible point.
    """
    if p_hat >= 1.0:
        return 1.0
    if beta <= 0.0:
        return p_hat
    target = beta / n
    # Pinsker gives d(p, q) >= 2(q-p)^2, so this point is at/above the root.
    q = p_hat + math.sqrt(0.5 * target)
    if q >= 1.0:
        # walk toward 1 until infeasible (d blows up at 1, so this ends)
        u = 1.0 - p_hat
        q = ONE_MINUS
        for _ in range(120):
            u *= 0.5
            cand = 1.0 - u
            if cand >= 1.0:
                break
            q = cand
            if kl_bern(p_hat, q) >= target:
                break
    for _ in range(100):
        g = kl_bern(p_hat, q) - target
        if g <= 0.0:
            return q
        dgdq = (q - p_hat) / (q * (1.0 - q))
        if dgdq <= 0.0:
            return q
        qn = q - g / dgdq
        if qn <= p_hat:
            qn = 0.5 * (p_hat + q)
        if q - qn < 1e-14:
            # converged from above; nudge across the root so the returned
            # point is on the feasible side
            qn = qn - 1e-13
            if qn <= p_hat:
                return p_hat
        q = qn
    return q


@njit(cache=True)
def klucb_lower_fast(p_hat, n, beta):
    """Lower-bound mirror of ``klucb_upper_fast`` via the complement map."""
    v = 1.0 - klucb_upper_fast(1.0 - p_hat, n, beta)
    if v > p_hat:
        v = p_hat
    if v < 0.0:
        v = 0.0
    return v


@njit(cache=True)
def chernoff_root(x, y):
    """(common divergence, equalizing point z*) for interior Bernoullis.

    Arguments are canonicalized to (min, max) before the bisection, which
    makes the result exactly symmetric in (x, y). h(z) = d(z,a) - d(z,b) is
    increasing in z between a and b, negative at a and positive at b.
    """
    a = min(x, y)
    b = max(x, y)
    if a == b:
        return 0.0, a
    lo = a
    hi = b
    it = 0
    while hi - lo > 1e-15 and it < 200:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if kl_bern(mid, a) - kl_bern(mid, b) <= 0.0:
            lo = mid
        else:
            hi = mid
        it += 1
    z = 0.5 * (lo + hi)
    return kl_bern(z, a), z


@njit(cache=True)
def beta_val(t, k1, num_arms, alpha, delta):
    """Exploration rate ln(A) + ln(ln(A)) with A = k1*K*t^alpha/delta."""
    a = math.log(k1 * num_arms * t ** alpha / delta)
    return a + math.log(a)
