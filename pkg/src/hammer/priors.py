"""Priors over hypotheses and output-set sizes, and the level function.

Two discrete prior families feed the step-up machinery: a
:class:`ComplexityPrior` spreads a confidence budget over the hypotheses in a
pool, and a :class:`SizePrior` weights the possible sizes of the output set.
What the procedures actually consume is the partial moment

    beta(k) = sum_{i <= k} i * gamma_i,

so every prior carries that map precomputed.  :class:`ContinuousPrior` is the
analogue for real-valued inverse output densities.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ComplexityPrior",
    "SizePrior",
    "ContinuousPrior",
    "complexity_prior_uniform",
    "complexity_prior_custom",
    "complexity_prior_from_csv",
    "size_prior_by",
    "size_prior_uniform",
    "size_prior_dirac",
    "size_prior_custom",
    "size_prior_from_csv",
    "continuous_prior_power",
    "continuous_prior_uniform01",
    "continuous_prior_table",
    "beta_inverse",
    "level_function",
    "harmonic_number",
]

# Inputs whose total weight is further than this from 1 get renormalized.
NORMALIZATION_ATOL = 1e-12

# Snap tolerance when a real-valued size like 1/theta lands a hair below an
# integer (e.g. 1/(1/7) = 6.999...9).
_SIZE_SNAP = 1e-9


def _as_weights(values, what: str) -> np.ndarray:
    w = np.asarray(values, dtype=float)
    if w.ndim != 1 or w.size == 0:
        raise ValueError(f"{what} requires a non-empty 1-d weight vector")
    if not np.all(np.isfinite(w)):
        raise ValueError(f"{what} weights must be finite")
    if np.any(w < 0.0):
        raise ValueError(f"{what} weights must be non-negative")
    total = float(w.sum())
    if total <= 0.0:
        raise ValueError(f"{what} weights must not all be zero")
    if abs(total - 1.0) > NORMALIZATION_ATOL:
        w = w / total
    return w


def _readonly(a: np.ndarray) -> np.ndarray:
    out = np.array(a, dtype=float, copy=True)
    out.flags.writeable = False
    return out


def harmonic_number(m: int) -> float:
    """Exactly rounded sum of 1/i for i = 1..m."""
    if m < 1:
        raise ValueError(f"harmonic_number needs m >= 1, got {m}")
    return math.fsum(1.0 / i for i in range(1, m + 1))


@dataclass(frozen=True)
class ComplexityPrior:
    """Normalized weights distributing a confidence budget over a pool.

    Weights are a probability density with respect to counting measure on the
    pool, i.e. they sum to one.  Inputs off by more than the normalization
    tolerance are rescaled rather than rejected; negative or all-zero inputs
    are errors.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = _as_weights(self.weights, "complexity prior")
        object.__setattr__(self, "weights", _readonly(w))

    @property
    def m(self) -> int:
        return int(self.weights.size)

    def __len__(self) -> int:
        return self.m


def complexity_prior_uniform(m: int) -> ComplexityPrior:
    """Equal weight 1/m on each of m hypotheses."""
    if m < 1:
        raise ValueError(f"pool size must be >= 1, got {m}")
    return ComplexityPrior(np.full(m, 1.0 / m))


def complexity_prior_custom(weights) -> ComplexityPrior:
    """Prior from explicit non-negative weights, renormalized to sum 1."""
    return ComplexityPrior(np.asarray(weights, dtype=float))


@dataclass(frozen=True)
class SizePrior:
    """Distribution over output-set sizes 1..m with its partial moments.

    ``beta_partial[k-1]`` holds sum_{i <= k} i * gamma_i, the value the level
    function looks up at candidate set size k.  The partial moments are
    nondecreasing and never exceed k.
    """

    gamma: np.ndarray
    beta_partial: np.ndarray

    def __post_init__(self):
        g = _as_weights(self.gamma, "size prior")
        b = np.asarray(self.beta_partial, dtype=float)
        if b.shape != g.shape:
            raise ValueError(
                f"beta_partial has length {b.size}, expected {g.size}"
            )
        k = np.arange(1, g.size + 1, dtype=float)
        if np.any(np.diff(b) < -1e-12):
            raise ValueError("partial moments must be nondecreasing")
        if np.any(b > k + 1e-9) or np.any(b < -1e-12):
            raise ValueError("partial moments must lie in [0, k]")
        object.__setattr__(self, "gamma", _readonly(g))
        object.__setattr__(self, "beta_partial", _readonly(b))

    @property
    def m(self) -> int:
        return int(self.gamma.size)

    def beta(self, k: int) -> float:
        """Partial moment at integer size k; beta(0) == 0 by convention."""
        if not 0 <= k <= self.m:
            raise ValueError(f"size {k} outside 0..{self.m}")
        if k == 0:
            return 0.0
        return float(self.beta_partial[k - 1])

    def beta_at(self, x: float) -> float:
        """Step evaluation at a real-valued size.

        Inverse output densities land on near-integers like 6.999...9, so the
        argument is snapped up by a tiny tolerance before flooring.  Values
        beyond m evaluate at m (the partial moment is constant there).
        """
        if not math.isfinite(x):
            if x > 0:
                return float(self.beta_partial[-1])
            raise ValueError(f"size must be finite or +inf, got {x}")
        k = int(math.floor(x + _SIZE_SNAP))
        if k < 1:
            return 0.0
        return float(self.beta_partial[min(k, self.m) - 1])


def size_prior_by(m: int) -> SizePrior:
    """Size prior gamma_k proportional to 1/k, the step-up choice whose
    thresholds reproduce the classical log-corrected baseline.

    With kappa the m-th harmonic number, gamma_k = 1/(k * kappa) and the
    partial moments collapse to beta(k) = k / kappa.
    """
    if m < 1:
        raise ValueError(f"pool size must be >= 1, got {m}")
    kappa = harmonic_number(m)
    sizes = np.arange(1, m + 1, dtype=float)
    gamma = 1.0 / (sizes * kappa)
    return SizePrior(gamma, sizes / kappa)


def size_prior_uniform(m: int) -> SizePrior:
    """Uniform size prior; beta(k) = k(k+1)/(2m) in closed form."""
    if m < 1:
        raise ValueError(f"pool size must be >= 1, got {m}")
    sizes = np.arange(1, m + 1, dtype=float)
    return SizePrior(np.full(m, 1.0 / m), sizes * (sizes + 1.0) / (2.0 * m))


def size_prior_dirac(a: int, m: int) -> SizePrior:
    """All mass on size a; beta(k) = a for k >= a and 0 below."""
    if m < 1:
        raise ValueError(f"pool size must be >= 1, got {m}")
    if not 1 <= a <= m:
        raise ValueError(f"dirac size {a} outside 1..{m}")
    gamma = np.zeros(m)
    gamma[a - 1] = 1.0
    beta = np.where(np.arange(1, m + 1) >= a, float(a), 0.0)
    return SizePrior(gamma, beta)


def size_prior_custom(weights) -> SizePrior:
    """Size prior from explicit weights over sizes 1..m."""
    gamma = _as_weights(weights, "size prior")
    sizes = np.arange(1, gamma.size + 1, dtype=float)
    return SizePrior(gamma, np.cumsum(sizes * gamma))


@dataclass(frozen=True)
class ContinuousPrior:
    """Prior over real-valued inverse output densities, given through the
    partial moment map beta(x) = integral of u over (0, x].

    Three kinds are supported: ``power`` with beta(x) = min(x^(n/(n-1)), 1)/n,
    ``uniform01`` with beta(x) = min(x, 1)^2 / 2, and ``table`` for a
    piecewise-linear beta through user knots.  Table knots must keep zero
    mass near the origin (first positive slope strictly right of 0), or the
    implied density would not integrate; table beta values are renormalized
    so the implied total mass is one.
    """

    kind: str
    x_max: float
    n: int | None = None
    knots_x: np.ndarray | None = None
    knots_beta: np.ndarray | None = None

    def beta(self, x):
        """Partial moment at x (scalar or array), for x >= 0."""
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0.0):
            raise ValueError("beta is defined for non-negative arguments")
        if self.kind == "power":
            expo = self.n / (self.n - 1.0)
            out = np.minimum(np.power(arr, expo), 1.0) / self.n
        elif self.kind == "uniform01":
            out = np.minimum(arr, 1.0) ** 2 / 2.0
        elif self.kind == "table":
            out = np.interp(arr, self.knots_x, self.knots_beta)
        else:
            raise ValueError(f"unknown continuous prior kind {self.kind!r}")
        return float(out) if np.isscalar(x) or arr.ndim == 0 else out

    def beta_ceiling(self) -> float:
        """Largest attainable partial moment, beta(x_max)."""
        return self.beta(self.x_max)

    def _increasing_from(self) -> float:
        """Left end of the strictly increasing range of beta."""
        if self.kind == "table":
            nonzero = np.nonzero(self.knots_beta > 0.0)[0]
            return float(self.knots_x[nonzero[0] - 1])
        return 0.0

    def _has_interior_flat(self) -> bool:
        if self.kind != "table":
            return False
        rising = np.nonzero(np.diff(self.knots_beta) > 0.0)[0]
        first, last = rising[0], rising[-1]
        return bool(np.any(np.diff(self.knots_beta)[first:last + 1] <= 0.0))


def continuous_prior_power(n: int) -> ContinuousPrior:
    """Power-law prior with density proportional to x^(-1+1/(n-1)) on (0, 1]."""
    if n < 2:
        raise ValueError(f"power prior needs n >= 2, got {n}")
    return ContinuousPrior(kind="power", x_max=1.0, n=n)


def continuous_prior_uniform01() -> ContinuousPrior:
    """Uniform prior on (0, 1]; beta(x) = x^2 / 2 there."""
    return ContinuousPrior(kind="uniform01", x_max=1.0)


def continuous_prior_table(knots_x, knots_beta) -> ContinuousPrior:
    """Piecewise-linear beta through (x, beta) knots.

    The implied density on a segment of slope s over (a, b] carries mass
    s * log(b/a), which must be finite: any positive slope starting at x = 0
    is rejected.  Beta values are scaled so the total implied mass is one.
    """
    xs = np.asarray(knots_x, dtype=float)
    bs = np.asarray(knots_beta, dtype=float)
    if xs.ndim != 1 or xs.size < 2 or bs.shape != xs.shape:
        raise ValueError("need matching 1-d knot vectors with >= 2 points")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(bs))):
        raise ValueError("knots must be finite")
    if np.any(np.diff(xs) <= 0.0) or xs[0] < 0.0:
        raise ValueError("knot abscissae must be strictly increasing from >= 0")
    if bs[0] != 0.0 or np.any(np.diff(bs) < 0.0):
        raise ValueError("beta knots must be nondecreasing starting at 0")
    slopes = np.diff(bs) / np.diff(xs)
    if np.any((slopes > 0.0) & (xs[:-1] == 0.0)):
        raise ValueError(
            "table prior would carry infinite mass: beta must stay 0 on a "
            "neighbourhood of the origin"
        )
    mass = float(np.sum(slopes * np.log(xs[1:] / np.where(xs[:-1] > 0.0, xs[:-1], 1.0)),
                        where=slopes > 0.0))
    if mass <= 0.0:
        raise ValueError("table prior carries no mass")
    return ContinuousPrior(
        kind="table", x_max=float(xs[-1]), knots_x=_readonly(xs),
        knots_beta=_readonly(bs / mass),
    )


def beta_inverse(prior: ContinuousPrior, y: float) -> float:
    """Invert the partial moment map of a continuous prior by bisection.

    Requires beta strictly increasing on its rising range; table priors with
    interior flat segments are rejected.  The bracket is shrunk until the
    abscissa is pinned to ~1e-15, so both the residual |beta(x) - y| and the
    round trip through beta stay far below their documented tolerances.
    """
    if not math.isfinite(y):
        raise ValueError(f"target must be finite, got {y}")
    ceiling = prior.beta_ceiling()
    if not 0.0 <= y <= ceiling:
        raise ValueError(f"target {y} outside [0, {ceiling}]")
    if prior._has_interior_flat():
        raise ValueError("beta has flat segments and is not invertible")
    lo = prior._increasing_from()
    hi = prior.x_max
    if y <= prior.beta(lo):
        return lo
    # invariant: beta(lo) < y <= beta(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if prior.beta(mid) < y:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * max(1.0, hi):
            break
    return hi


def level_function(delta: float, prior_weight: float, beta_value: float) -> float:
    """Per-hypothesis rejection level min(delta * weight * beta, 1)."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"confidence budget must lie in [0, 1], got {delta}")
    if prior_weight < 0.0 or beta_value < 0.0:
        raise ValueError("prior weight and partial moment must be non-negative")
    return min(delta * prior_weight * beta_value, 1.0)


def _read_two_column_csv(path, header: tuple[str, str]):
    """Yield (line_number, first, second) for a two-column CSV with header."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        got = tuple(c.strip().lower() for c in head)
        if got != header:
            raise ValueError(
                f"{path}: expected header {','.join(header)!r}, got {','.join(head)!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            yield lineno, row[0].strip(), row[1].strip()


def size_prior_from_csv(path, m: int | None = None) -> SizePrior:
    """Load a size prior from ``index,weight`` rows (1-based sizes).

    Missing sizes get weight zero; m defaults to the largest index present.
    """
    entries: dict[int, float] = {}
    for lineno, raw_idx, raw_w in _read_two_column_csv(path, ("index", "weight")):
        try:
            idx = int(raw_idx)
            weight = float(raw_w)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed row {raw_idx!r},{raw_w!r}") from None
        if idx < 1:
            raise ValueError(f"{path}:{lineno}: size index must be >= 1, got {idx}")
        if idx in entries:
            raise ValueError(f"{path}:{lineno}: duplicate size index {idx}")
        entries[idx] = weight
    if not entries:
        raise ValueError(f"{path}: no data rows")
    top = max(entries)
    if m is None:
        m = top
    elif top > m:
        raise ValueError(f"{path}: size index {top} exceeds pool size {m}")
    weights = np.zeros(m)
    for idx, weight in entries.items():
        weights[idx - 1] = weight
    return size_prior_custom(weights)


def complexity_prior_from_csv(path, ids) -> ComplexityPrior:
    """Load per-hypothesis weights from ``hypothesis_id,weight`` rows.

    Every id in ``ids`` must appear exactly once; the returned prior follows
    the order of ``ids``.
    """
    table: dict[str, float] = {}
    for lineno, hid, raw_w in _read_two_column_csv(path, ("hypothesis_id", "weight")):
        try:
            weight = float(raw_w)
        except ValueError:
            raise ValueError(f"{path}:{lineno}: malformed weight {raw_w!r}") from None
        if hid in table:
            raise ValueError(f"{path}:{lineno}: duplicate hypothesis id {hid!r}")
        table[hid] = weight
    missing = [h for h in ids if h not in table]
    if missing:
        raise ValueError(f"{path}: no weight for hypothesis id(s) {missing[:5]}")
    return complexity_prior_custom([table[h] for h in ids])
