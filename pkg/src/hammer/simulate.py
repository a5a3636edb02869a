"""Monte Carlo harnesses for every guarantee the procedures carry.

Synthetic pools draw equicorrelated Gaussian test statistics, convert them
to one-sided p-values, and feed the step-up procedures; the validators
re-run a randomized selection thousands of times and count how often its
level or divergence budget is breached.  Each trial owns an independent
generator seeded from ``(master_seed, trial_index)``, so results do not
depend on trial order and a parallel driver would reproduce them exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import erfc

from . import multitest
from .bounds import hammer_classifier_budget, kl_bernoulli_plus
from .priors import (
    ComplexityPrior,
    ContinuousPrior,
    SizePrior,
    complexity_prior_uniform,
    size_prior_by,
)

__all__ = [
    "DEFAULT_SEED",
    "ScenarioSpec",
    "McEstimate",
    "trial_rng",
    "generate_pvalues",
    "estimate_fdr",
    "validate_constant_volume",
    "validate_hammer_joint",
    "validate_classifier_coverage",
    "top_k_rule",
    "random_top_k_rule",
    "softmax_rule",
    "empirical_softmax_rule",
    "ks_distance",
]

# Seed used by every entry point when the caller does not pass one.
DEFAULT_SEED = 42

# Margin keeping the equicorrelation matrix positive definite.
_RHO_SLACK = 1e-6

# A randomized-selection density must sum to one within this much.
_DENSITY_ATOL = 1e-9


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent per-trial stream derived from (master_seed, trial_index)."""
    return np.random.default_rng([master_seed, trial_index])


@dataclass(frozen=True)
class ScenarioSpec:
    """Synthetic-pool recipe: pool size, how many nulls, signal and correlation.

    The first ``m0`` hypotheses are true nulls; the rest carry a mean shift
    of ``effect`` on the test statistic.  ``rho`` is the common pairwise
    correlation, valid down to -1/(m-1) (plus a sliver keeping the
    covariance positive definite).
    """

    m: int
    m0: int
    effect: float = 3.0
    rho: float = 0.0
    trials: int = 10_000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"pool size must be >= 1, got {self.m}")
        if not 0 <= self.m0 <= self.m:
            raise ValueError(f"null count {self.m0} outside 0..{self.m}")
        if not math.isfinite(self.effect):
            raise ValueError(f"effect must be finite, got {self.effect}")
        if self.m == 1:
            if self.rho != 0.0:
                raise ValueError("correlation must be 0 for a single hypothesis")
        else:
            lowest = -1.0 / (self.m - 1) + _RHO_SLACK
            if not lowest <= self.rho < 1.0:
                raise ValueError(
                    f"correlation {self.rho} outside [{lowest:.6g}, 1) for m={self.m}"
                )
        if self.trials < 1:
            raise ValueError(f"need at least one trial, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class McEstimate:
    """A Monte Carlo point estimate with its uncertainty and provenance."""

    trials: int
    value: float
    std_error: float
    seed: int
    events: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("an estimate needs at least one trial")
        if self.std_error < 0.0:
            raise ValueError("standard error cannot be negative")


@lru_cache(maxsize=8)
def _pool_ids(m: int) -> tuple[str, ...]:
    width = len(str(m - 1)) if m > 1 else 1
    return tuple(f"h{i:0{width}d}" for i in range(m))


def _draw_pool(spec: ScenarioSpec, rng: np.random.Generator) -> multitest.HypothesisPool:
    m, rho = spec.m, spec.rho
    if rho > 0.0:
        shared = rng.standard_normal()
        z = math.sqrt(rho) * shared + math.sqrt(1.0 - rho) * rng.standard_normal(m)
    else:
        # exchangeable with negative (or zero) correlation: a centered
        # adjustment of iid noise; rho == 0 reduces to the iid draw exactly
        eps = rng.standard_normal(m)
        a = math.sqrt(1.0 - rho)
        b = math.sqrt(1.0 + (m - 1) * rho) - a
        z = a * eps + b * eps.mean()
    if spec.m0 < m:
        z[spec.m0:] += spec.effect
    p = 0.5 * erfc(z / math.sqrt(2.0))
    mask = np.zeros(m, dtype=bool)
    mask[: spec.m0] = True
    return multitest.HypothesisPool(ids=_pool_ids(m), p_values=p, null_mask=mask)


def generate_pvalues(spec: ScenarioSpec, trial_seed) -> multitest.HypothesisPool:
    """One synthetic pool; ``trial_seed`` is anything accepted by default_rng."""
    return _draw_pool(spec, np.random.default_rng(trial_seed))


def _empirical_mean(values: np.ndarray, seed: int) -> McEstimate:
    trials = values.size
    se = float(values.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return McEstimate(trials=trials, value=float(values.mean()), std_error=se, seed=seed)


def _event_rate(count: int, trials: int, seed: int) -> McEstimate:
    rate = count / trials
    se = math.sqrt(rate * (1.0 - rate) / trials)
    return McEstimate(trials=trials, value=rate, std_error=se, seed=seed, events=count)


def estimate_fdr(spec: ScenarioSpec, alpha: float, procedure: str = "hammer",
                 prior: ComplexityPrior | None = None,
                 size_prior: SizePrior | None = None) -> McEstimate:
    """Mean realized FDP of a procedure over ``spec.trials`` synthetic pools.

    Parameters
    ----------
    procedure : {"hammer", "bh", "by"}
        "hammer" runs the prior-weighted step-up (uniform complexity prior
        and 1/k size prior unless overridden); the other two are the
        classical baselines and ignore the priors.
    """
    if procedure not in ("hammer", "bh", "by"):
        raise ValueError(f"unknown procedure {procedure!r}")
    if procedure == "hammer":
        prior = prior if prior is not None else complexity_prior_uniform(spec.m)
        size_prior = size_prior if size_prior is not None else size_prior_by(spec.m)
    fdps = np.empty(spec.trials)
    for t in range(spec.trials):
        pool = _draw_pool(spec, trial_rng(spec.seed, t))
        if procedure == "hammer":
            result = multitest.step_up(pool, prior, size_prior, alpha)
        elif procedure == "bh":
            result = multitest.bh_baseline(pool, alpha)
        else:
            result = multitest.by_baseline(pool, alpha)
        fdps[t] = multitest.realized_fdp(result, pool)
    return _empirical_mean(fdps, spec.seed)


def validate_constant_volume(spec: ScenarioSpec, a: int, delta: float,
                             prior: ComplexityPrior | None = None) -> McEstimate:
    """Mean false-positive rate of always-select-a-hypotheses selection.

    Each trial picks the ``a`` smallest p-values and counts how many fall
    below their level min(delta * a * weight, 1); the mean count over a must
    stay below delta whenever the nulls hold.
    """
    if not 1 <= a <= spec.m:
        raise ValueError(f"selection size {a} outside 1..{spec.m}")
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    prior = prior if prior is not None else complexity_prior_uniform(spec.m)
    if prior.m != spec.m:
        raise ValueError(f"prior sized for {prior.m}, scenario has {spec.m}")
    levels = np.minimum(delta * a * prior.weights, 1.0)
    rates = np.empty(spec.trials)
    for t in range(spec.trials):
        pool = _draw_pool(spec, trial_rng(spec.seed, t))
        chosen = np.argsort(pool.p_values, kind="stable")[:a]
        hits = (pool.p_values[chosen] <= levels[chosen]) & (levels[chosen] > 0.0)
        rates[t] = np.count_nonzero(hits) / a
    return _empirical_mean(rates, spec.seed)


def validate_hammer_joint(spec: ScenarioSpec, rule, size_prior, delta: float,
                          prior: ComplexityPrior | None = None) -> McEstimate:
    """Violation frequency of the level function under randomized selection.

    Each trial runs ``rule(p_values, rng)`` to get a selection density over
    the pool, draws one hypothesis from it, and checks the bad event
    p <= min(delta * weight * beta(1/density), 1).  The frequency must stay
    below delta for any rule when the nulls hold.

    ``size_prior`` may be a :class:`SizePrior` (densities against counting
    measure, beta evaluated at the integer floor) or a
    :class:`ContinuousPrior`.
    """
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    prior = prior if prior is not None else complexity_prior_uniform(spec.m)
    if prior.m != spec.m:
        raise ValueError(f"prior sized for {prior.m}, scenario has {spec.m}")
    if isinstance(size_prior, SizePrior):
        if size_prior.m != spec.m:
            raise ValueError(f"size prior sized for {size_prior.m}, scenario has {spec.m}")
        beta_at = size_prior.beta_at
    elif isinstance(size_prior, ContinuousPrior):
        beta_at = size_prior.beta
    else:
        raise ValueError("size_prior must be a SizePrior or ContinuousPrior")
    violations = 0
    for t in range(spec.trials):
        rng = trial_rng(spec.seed, t)
        pool = _draw_pool(spec, rng)
        theta = _checked_density(rule(pool.p_values, rng), spec.m)
        h = int(rng.choice(spec.m, p=theta))
        level = min(delta * prior.weights[h] * beta_at(1.0 / theta[h]), 1.0)
        if level > 0.0 and pool.p_values[h] <= level:
            violations += 1
    return _event_rate(violations, spec.trials, spec.seed)


def validate_classifier_coverage(n: int, delta: float, true_errors,
                                 rule=None, trials: int = 10_000,
                                 seed: int = DEFAULT_SEED) -> McEstimate:
    """Violation frequency of the selected-classifier divergence budget.

    Each trial draws binomial empirical errors for the whole family, runs
    ``rule(empirical_errors, rng)`` to get a selection density, picks one
    classifier, and checks kl+(empirical || true) against the budget at the
    realized density (taken relative to uniform on the family).  Defaults to
    the softmax rule exp(-n * empirical).
    """
    errors = np.asarray(true_errors, dtype=float)
    if errors.ndim != 1 or errors.size == 0:
        raise ValueError("need a non-empty 1-d vector of true error rates")
    if np.any(errors < 0.0) or np.any(errors > 1.0):
        raise ValueError("true error rates must lie in [0, 1]")
    if trials < 1:
        raise ValueError(f"need at least one trial, got {trials}")
    if rule is None:
        rule = empirical_softmax_rule(n)
    m = errors.size
    violations = 0
    for t in range(trials):
        rng = trial_rng(seed, t)
        empirical = rng.binomial(n, errors) / n
        theta = _checked_density(rule(empirical, rng), m)
        h = int(rng.choice(m, p=theta))
        budget = hammer_classifier_budget(n, delta, theta[h] * m)
        if kl_bernoulli_plus(empirical[h], errors[h]) > budget:
            violations += 1
    return _event_rate(violations, trials, seed)


def _checked_density(theta, m: int) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (m,):
        raise ValueError(f"selection density must have shape ({m},)")
    if np.any(theta < 0.0) or not np.all(np.isfinite(theta)):
        raise ValueError("selection density must be finite and non-negative")
    if abs(float(theta.sum()) - 1.0) > _DENSITY_ATOL:
        raise ValueError("selection density must sum to one")
    return theta


def top_k_rule(k: int):
    """Selection density uniform on the k smallest p-values."""
    if k < 1:
        raise ValueError(f"need k >= 1, got {k}")

    def rule(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if k > values.size:
            raise ValueError(f"k={k} exceeds pool size {values.size}")
        theta = np.zeros(values.size)
        theta[np.argsort(values, kind="stable")[:k]] = 1.0 / k
        return theta

    return rule


def random_top_k_rule():
    """Like :func:`top_k_rule` but with k drawn uniformly from 1..m each trial."""

    def rule(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        k = int(rng.integers(1, values.size + 1))
        theta = np.zeros(values.size)
        theta[np.argsort(values, kind="stable")[:k]] = 1.0 / k
        return theta

    return rule


def softmax_rule(scale: float = 1.0):
    """Selection density proportional to exp(-scale * p)."""

    def rule(values: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        w = np.exp(-scale * values - np.max(-scale * values))
        return w / w.sum()

    return rule


def empirical_softmax_rule(n: int):
    """Selection density proportional to exp(-n * empirical_error)."""

    def rule(empirical: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        shifted = -float(n) * empirical
        w = np.exp(shifted - shifted.max())
        return w / w.sum()

    return rule


def ks_distance(samples, cdf) -> float:
    """Kolmogorov-Smirnov distance between samples and a target CDF callable."""
    s = np.sort(np.asarray(samples, dtype=float))
    if s.size == 0:
        raise ValueError("need at least one sample")
    grid = cdf(s)
    n = s.size
    upper = np.max(np.arange(1, n + 1) / n - grid)
    lower = np.max(grid - np.arange(0, n) / n)
    return float(max(upper, lower))
