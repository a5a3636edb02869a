"""Error bounds for randomly selected classifiers.

Selecting a classifier after seeing its empirical error invalidates the
usual single-hypothesis Chernoff bound.  The repair costs one extra term:
with n samples and confidence 1 - delta, a classifier drawn with density
theta (relative to the uniform distribution over the family) satisfies

    kl+(empirical || true) <= log(n / delta) / n + log+(theta) / (n - 1)

where kl+ is the one-sided Bernoulli divergence.  Inverting the divergence
in its second argument converts the budget into an upper confidence bound
on the true error.  A binomial tail inversion is included as the exact
(non-KL) comparison point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln, logsumexp

__all__ = [
    "kl_bernoulli_plus",
    "kl_upper_inverse",
    "hammer_classifier_budget",
    "chernoff_violation",
    "binomial_tail_inverse",
    "ClassifierBoundReport",
    "classifier_bound_report",
]


def _check_unit(value: float, name: str) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return value


def kl_bernoulli_plus(q: float, p: float) -> float:
    """One-sided Bernoulli divergence kl+(q || p).

    Zero when q >= p; otherwise q*log(q/p) + (1-q)*log((1-q)/(1-p)) with the
    0*log(0) = 0 convention.  Returns inf for q < p = 1, where no finite
    divergence separates the two.
    """
    q = _check_unit(q, "q")
    p = _check_unit(p, "p")
    if q >= p:
        return 0.0
    if p == 1.0:
        return math.inf
    first = 0.0 if q == 0.0 else q * math.log(q / p)
    return first + (1.0 - q) * math.log((1.0 - q) / (1.0 - p))


def kl_upper_inverse(q: float, budget: float) -> float:
    """Largest p with kl+(q || p) <= budget.

    The divergence is continuous and strictly increasing in p on [q, 1), so
    the solution is found by bisection.  Iterating on log(1 - p) rather than
    p keeps the root well conditioned as p -> 1; when even p = 1 - 5e-324
    fits the budget the bound saturates at 1.0.
    """
    q = _check_unit(q, "q")
    budget = float(budget)
    if math.isnan(budget) or budget < 0.0:
        raise ValueError(f"budget must be >= 0, got {budget}")
    if q == 1.0 or math.isinf(budget):
        return 1.0
    if budget == 0.0:
        return q

    log1mq = math.log1p(-q)

    def diverg(s: float) -> float:
        # kl+(q || 1 - e^s); -expm1 keeps 1-p honest near both ends
        p = -math.expm1(s)
        first = 0.0 if q == 0.0 else q * math.log(q / p)
        return first + (1.0 - q) * (log1mq - s)

    lo, hi = log1mq, -745.0  # p = q down to p = 1 - 5e-324
    if diverg(lo) >= budget:
        return q
    if diverg(hi) <= budget:
        return 1.0
    # invariant: diverg(lo) < budget < diverg(hi)  (s decreasing, p increasing)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid >= lo or mid <= hi:
            break
        if diverg(mid) <= budget:
            lo = mid
        else:
            hi = mid
    p = -math.expm1(lo)
    # rounding s -> p can overshoot the budget (or hit 1.0 exactly) when the
    # root sits closer to 1 than the double grid resolves; step back down
    while p > q and kl_bernoulli_plus(q, p) > budget:
        p = math.nextafter(p, q)
    return p


def hammer_classifier_budget(n: int, delta: float, theta_value: float) -> float:
    """Divergence budget log(n/delta)/n + log+(theta)/(n-1).

    ``theta_value`` is the selection density relative to the uniform
    distribution over the classifier family; values below 1 (selection rarer
    than uniform) contribute nothing.
    """
    if n < 2:
        raise ValueError(f"need n >= 2 samples, got {n}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if theta_value < 0.0:
        raise ValueError(f"selection density must be >= 0, got {theta_value}")
    budget = math.log(n / delta) / n
    if theta_value > 1.0:
        budget += math.log(theta_value) / (n - 1)
    return budget


def chernoff_violation(empirical: float, truth: float, n: int, delta: float) -> bool:
    """Whether kl+(empirical || truth) breaks the fixed-classifier budget
    log(1/delta)/n; happens with probability at most delta."""
    if n < 1:
        raise ValueError(f"need n >= 1 samples, got {n}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    return kl_bernoulli_plus(empirical, truth) > math.log(1.0 / delta) / n


def binomial_tail_inverse(k: int, n: int, delta: float) -> float:
    """Largest p with P(Bin(n, p) <= k) >= delta.

    The lower-tail probability is evaluated in log space (log-binomial
    coefficients via lgamma, combined by log-sum-exp) so the bisection stays
    stable out to n in the millions.  k = n returns 1.0: the tail is then
    identically one.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    if k == n:
        return 1.0
    j = np.arange(k + 1, dtype=float)
    log_choose = gammaln(n + 1.0) - gammaln(j + 1.0) - gammaln(n - j + 1.0)
    log_delta = math.log(delta)

    def tail_at_least_delta(p: float) -> bool:
        if p == 0.0:
            return True
        if p == 1.0:
            return False
        log_terms = log_choose + j * math.log(p) + (n - j) * math.log1p(-p)
        return logsumexp(log_terms) >= log_delta

    lo, hi = 0.0, 1.0
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if tail_at_least_delta(mid):
            lo = mid
        else:
            hi = mid
    return lo


@dataclass(frozen=True)
class ClassifierBoundReport:
    """Everything the classifier-bound CLI emits for one query."""

    n: int
    delta: float
    theta_value: float
    empirical_error: float
    kl_budget: float
    error_upper_bound: float

    def __post_init__(self):
        if self.error_upper_bound < self.empirical_error:
            raise ValueError("upper bound fell below the empirical error")


def classifier_bound_report(n: int, delta: float, theta_value: float,
                            empirical_error: float) -> ClassifierBoundReport:
    """Budget plus inverted bound for one (n, delta, theta, empirical) query."""
    budget = hammer_classifier_budget(n, delta, theta_value)
    upper = kl_upper_inverse(_check_unit(empirical_error, "empirical error"), budget)
    return ClassifierBoundReport(
        n=n, delta=delta, theta_value=theta_value,
        empirical_error=empirical_error, kl_budget=budget,
        error_upper_bound=upper,
    )
