"""Step-up multiple testing with prior-weighted levels.

The central object is the largest self-consistent rejection set: scanning
candidate sizes k, hypothesis h is admitted at size k when its p-value sits
below ``alpha * weight(h) * beta(k)``, and the procedure returns the largest
k whose admitted set has at least k members.  That set then has exactly k
members, which :func:`brute_force_sup` verifies independently on small pools
by enumerating every subset.  Classical BH/BY step-ups are provided as
standalone baselines, and :func:`markov_confidence` turns the expected-FDP
bound into a confidence statement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _stepup
from .priors import ComplexityPrior, SizePrior, harmonic_number

__all__ = [
    "HypothesisPool",
    "StepUpResult",
    "step_up",
    "brute_force_sup",
    "bh_baseline",
    "by_baseline",
    "realized_fdp",
    "markov_confidence",
]

# Subset enumeration is exponential; refuse pools past this size.
BRUTE_FORCE_MAX_M = 20


@dataclass(frozen=True)
class HypothesisPool:
    """A finite pool of hypotheses with p-values and optional ground truth.

    Parameters
    ----------
    ids : sequence of str
        Distinct hypothesis labels.
    p_values : array-like
        One p-value per id, each in [0, 1].
    null_mask : array-like of bool, optional
        True where the null actually holds; only simulations know this.
    """

    ids: tuple[str, ...]
    p_values: np.ndarray
    null_mask: np.ndarray | None = None

    def __post_init__(self):
        ids = tuple(str(h) for h in self.ids)
        if len(set(ids)) != len(ids):
            raise ValueError("hypothesis ids must be distinct")
        p = np.asarray(self.p_values, dtype=float)
        if p.ndim != 1 or p.size != len(ids):
            raise ValueError(
                f"expected {len(ids)} p-values in a 1-d array, got shape {p.shape}"
            )
        if p.size and (not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0):
            raise ValueError("p-values must lie in [0, 1]")
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "p_values", p)
        if self.null_mask is not None:
            mask = np.asarray(self.null_mask, dtype=bool)
            if mask.shape != p.shape:
                raise ValueError("null mask must match the pool size")
            mask = mask.copy()
            mask.flags.writeable = False
            object.__setattr__(self, "null_mask", mask)

    @property
    def m(self) -> int:
        return len(self.ids)


@dataclass(frozen=True)
class StepUpResult:
    """Outcome of a step-up run: the fixpoint size and who got rejected.

    ``thresholds`` records, for every hypothesis, the level it was compared
    against at the final size k_star (zero when nothing is rejected).
    """

    rejected: frozenset[str]
    k_star: int
    alpha: float
    thresholds: dict[str, float] = field(repr=False)

    def __post_init__(self):
        if len(self.rejected) != self.k_star:
            raise ValueError(
                f"rejected set has {len(self.rejected)} members, k_star={self.k_star}"
            )


def _empty_result(pool: HypothesisPool, alpha: float) -> StepUpResult:
    return StepUpResult(
        rejected=frozenset(), k_star=0, alpha=alpha,
        thresholds={h: 0.0 for h in pool.ids},
    )


def _check_dims(pool, prior, size_prior):
    if prior.m != pool.m:
        raise ValueError(f"complexity prior sized for {prior.m}, pool has {pool.m}")
    if size_prior.m != pool.m:
        raise ValueError(f"size prior sized for {size_prior.m}, pool has {pool.m}")


def step_up(pool: HypothesisPool, prior: ComplexityPrior,
            size_prior: SizePrior, alpha: float) -> StepUpResult:
    """Largest self-consistent rejection set under prior-weighted levels.

    Parameters
    ----------
    pool : HypothesisPool
    prior : ComplexityPrior
        Per-hypothesis weights; a hypothesis with zero weight is never
        rejected.
    size_prior : SizePrior
        Supplies the partial moments beta(k) entering the levels.
    alpha : float
        Confidence budget in [0, 1].  The expected FDP of the returned set
        is at most alpha times the null mass under ``prior``, whatever the
        joint p-value distribution.

    Returns
    -------
    StepUpResult
        With alpha = 0 (or an all-zero row of levels) nothing is rejected.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if pool.m == 0:
        return _empty_result(pool, alpha)
    _check_dims(pool, prior, size_prior)
    base = alpha * prior.weights
    k_star = _stepup.kstar(pool.p_values, base, size_prior.beta_partial)
    if k_star == 0:
        return _empty_result(pool, alpha)
    thresholds = base * size_prior.beta_partial[k_star - 1]
    hits = (pool.p_values <= thresholds) & (thresholds > 0.0)
    rejected = frozenset(pool.ids[i] for i in np.nonzero(hits)[0])
    # the admitted count at k_star equals k_star exactly; anything else is a
    # kernel defect, not an input problem
    assert len(rejected) == k_star
    return StepUpResult(
        rejected=rejected, k_star=k_star, alpha=alpha,
        thresholds={h: float(t) for h, t in zip(pool.ids, thresholds)},
    )


def brute_force_sup(pool: HypothesisPool, prior: ComplexityPrior,
                    size_prior: SizePrior, alpha: float) -> StepUpResult:
    """Reference answer by enumerating all 2^m candidate sets.

    A set G is admissible when every member passes its test at size |G|;
    the union of admissible sets is returned.  Only feasible for
    m <= ``BRUTE_FORCE_MAX_M``; exists to cross-check :func:`step_up`.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    m = pool.m
    if m == 0:
        return _empty_result(pool, alpha)
    if m > BRUTE_FORCE_MAX_M:
        raise ValueError(f"subset enumeration capped at m={BRUTE_FORCE_MAX_M}, got {m}")
    _check_dims(pool, prior, size_prior)
    base = alpha * prior.weights
    # ok[s-1, h]: h passes its test at candidate size s
    levels = base[np.newaxis, :] * size_prior.beta_partial[:, np.newaxis]
    ok = (pool.p_values[np.newaxis, :] <= levels) & (levels > 0.0)
    allowed_by_size = np.zeros(m + 1, dtype=np.int64)
    for s in range(1, m + 1):
        allowed_by_size[s] = int(np.sum((1 << np.nonzero(ok[s - 1])[0]).astype(np.int64)))
    subsets = np.arange(1 << m, dtype=np.int64)
    sizes = np.zeros(1 << m, dtype=np.int64)
    for b in range(m):
        sizes += (subsets >> b) & 1
    admissible = (subsets & ~allowed_by_size[sizes]) == 0
    union = int(np.bitwise_or.reduce(subsets[admissible]))
    members = [h for h in range(m) if union >> h & 1]
    k_star = len(members)
    if k_star == 0:
        return _empty_result(pool, alpha)
    thresholds = base * size_prior.beta_partial[k_star - 1]
    return StepUpResult(
        rejected=frozenset(pool.ids[i] for i in members),
        k_star=k_star, alpha=alpha,
        thresholds={h: float(t) for h, t in zip(pool.ids, thresholds)},
    )


def _classical_step_up(pool: HypothesisPool, alpha: float, kappa: float) -> StepUpResult:
    """Shared sorted-threshold machinery for the BH/BY baselines."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    m = pool.m
    if m == 0:
        return _empty_result(pool, alpha)
    sorted_p = np.sort(pool.p_values)
    thresholds = np.arange(1, m + 1) * alpha / (m * kappa)
    hits = np.nonzero((sorted_p <= thresholds) & (thresholds > 0.0))[0]
    if hits.size == 0:
        return _empty_result(pool, alpha)
    k_star = int(hits[-1]) + 1
    cut = float(thresholds[k_star - 1])
    rejected = frozenset(
        pool.ids[i] for i in np.nonzero(pool.p_values <= cut)[0]
    )
    # ties cannot straddle the cut: the count at the cut is k_star itself
    assert len(rejected) == k_star
    return StepUpResult(
        rejected=rejected, k_star=k_star, alpha=alpha,
        thresholds={h: cut for h in pool.ids},
    )


def bh_baseline(pool: HypothesisPool, alpha: float) -> StepUpResult:
    """Classical step-up against thresholds k * alpha / m."""
    return _classical_step_up(pool, alpha, 1.0)


def by_baseline(pool: HypothesisPool, alpha: float) -> StepUpResult:
    """Log-corrected step-up against thresholds k * alpha / (m * kappa),
    kappa the m-th harmonic number; valid under arbitrary dependence."""
    kappa = harmonic_number(pool.m) if pool.m else 1.0
    return _classical_step_up(pool, alpha, kappa)


def realized_fdp(result: StepUpResult, pool: HypothesisPool) -> float:
    """False-discovery proportion of a result against known ground truth."""
    if pool.null_mask is None:
        raise ValueError("pool carries no ground-truth null labels")
    if not result.rejected:
        return 0.0
    nulls = {h for h, is_null in zip(pool.ids, pool.null_mask) if is_null}
    return len(result.rejected & nulls) / len(result.rejected)


def markov_confidence(expected_fpr_bound: float, delta: float) -> float:
    """Confidence-level bound min(expected_bound / delta, 1) via Markov."""
    if not 0.0 < delta <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if expected_fpr_bound < 0.0 or not math.isfinite(expected_fpr_bound):
        raise ValueError(f"expected bound must be finite and >= 0, got {expected_fpr_bound}")
    return min(expected_fpr_bound / delta, 1.0)
