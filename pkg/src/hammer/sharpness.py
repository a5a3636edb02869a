"""Worst-case construction showing the step-up FDR bound is tight.

Hypotheses sit on a discretized circle and every null is true.  Each trial
drops an arc of high test-statistic values whose height is tuned so that a
selection rule choosing the arc incurs false-positive rate alpha0 exactly:
with arc mass u placed at the upper quantile of level alpha0 * beta(u /
alpha0), the rejection threshold at realized set size s reproduces the arc
height when s = u / alpha0, so the bound cannot be improved for any
procedure using those thresholds.  Off the arc, values are resampled from
the target marginal conditioned below the cut, which keeps the pointwise
distribution of every hypothesis exactly the target marginal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr, ndtri

from .simulate import DEFAULT_SEED, ks_distance

__all__ = [
    "UniformSizeDistribution",
    "TableSizeDistribution",
    "load_size_distribution",
    "GaussianMarginal",
    "UniformMarginal",
    "SharpnessConfig",
    "SharpnessModel",
    "SharpnessTrial",
    "SharpnessSummary",
    "build_construction",
    "run_trial",
    "estimate",
]


class UniformSizeDistribution:
    """Relative set size |A| uniform on [0, 1]; partial moment x^2 / 2."""

    def beta(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0.0):
            raise ValueError("beta is defined for non-negative arguments")
        out = np.minimum(arr, 1.0) ** 2 / 2.0
        return float(out) if arr.ndim == 0 else out

    def beta_inverse(self, y: float) -> float:
        if not 0.0 <= y <= 0.5:
            raise ValueError(f"target {y} outside [0, 0.5]")
        return math.sqrt(2.0 * y)

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.clip(arr, 0.0, 1.0)
        return float(out) if arr.ndim == 0 else out

    def sample(self, rng: np.random.Generator) -> float:
        return float(rng.random())


class TableSizeDistribution:
    """Set-size distribution from a piecewise-linear CDF on [0, 1].

    Knots run from (0, 0) to (1, 1) with both coordinates strictly
    increasing, so the density is piecewise constant and positive and the
    partial moment is strictly increasing, as the tightness construction
    requires.
    """

    def __init__(self, knots_x, knots_cdf):
        xs = np.asarray(knots_x, dtype=float)
        cs = np.asarray(knots_cdf, dtype=float)
        if xs.ndim != 1 or xs.size < 2 or cs.shape != xs.shape:
            raise ValueError("need matching 1-d knot vectors with >= 2 points")
        if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(cs))):
            raise ValueError("knots must be finite")
        if xs[0] != 0.0 or xs[-1] != 1.0 or np.any(np.diff(xs) <= 0.0):
            raise ValueError("x knots must increase strictly from 0 to 1")
        if cs[0] != 0.0 or cs[-1] != 1.0 or np.any(np.diff(cs) <= 0.0):
            raise ValueError("cdf knots must increase strictly from 0 to 1")
        self.knots_x = xs
        self.knots_cdf = cs
        self._density = np.diff(cs) / np.diff(xs)
        # partial moments at the knots: integral of u * density
        self._beta_knots = np.concatenate((
            [0.0], np.cumsum(self._density * np.diff(xs ** 2) / 2.0),
        ))

    def beta(self, x):
        arr = np.asarray(x, dtype=float)
        if np.any(arr < 0.0):
            raise ValueError("beta is defined for non-negative arguments")
        clipped = np.minimum(arr, 1.0)
        seg = np.clip(np.searchsorted(self.knots_x, clipped, side="right") - 1,
                      0, self._density.size - 1)
        out = self._beta_knots[seg] + self._density[seg] * (
            clipped ** 2 - self.knots_x[seg] ** 2) / 2.0
        return float(out) if arr.ndim == 0 else out

    def beta_inverse(self, y: float) -> float:
        top = float(self._beta_knots[-1])
        if not 0.0 <= y <= top:
            raise ValueError(f"target {y} outside [0, {top}]")
        lo, hi = 0.0, 1.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self.beta(mid) < y:
                lo = mid
            else:
                hi = mid
        return hi

    def cdf(self, x):
        arr = np.asarray(x, dtype=float)
        out = np.interp(arr, self.knots_x, self.knots_cdf)
        return float(out) if arr.ndim == 0 else out

    def sample(self, rng: np.random.Generator) -> float:
        return float(np.interp(rng.random(), self.knots_cdf, self.knots_x))


def load_size_distribution(path) -> TableSizeDistribution:
    """Load a set-size distribution from ``x,cdf`` CSV rows."""
    xs, cs = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            head = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        if tuple(c.strip().lower() for c in head) != ("x", "cdf"):
            raise ValueError(f"{path}: expected header 'x,cdf', got {','.join(head)!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"{path}:{lineno}: expected 2 columns, got {len(row)}")
            try:
                xs.append(float(row[0]))
                cs.append(float(row[1]))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed row {row!r}") from None
    if not xs:
        raise ValueError(f"{path}: no data rows")
    return TableSizeDistribution(xs, cs)


class GaussianMarginal:
    """Standard normal values on the circle."""

    name = "gaussian"

    def cdf(self, t):
        return ndtr(np.asarray(t, dtype=float))

    def upper_quantile(self, level: float) -> float:
        """The t with P(X > t) = level."""
        if not 0.0 < level < 1.0:
            raise ValueError(f"upper-quantile level must lie in (0, 1), got {level}")
        return float(-ndtri(level))

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.standard_normal(size)


class UniformMarginal:
    """Uniform [0, 1] values on the circle."""

    name = "uniform"

    def cdf(self, t):
        return np.clip(np.asarray(t, dtype=float), 0.0, 1.0)

    def upper_quantile(self, level: float) -> float:
        if not 0.0 < level < 1.0:
            raise ValueError(f"upper-quantile level must lie in (0, 1), got {level}")
        return 1.0 - level

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.random(size)


_MARGINALS = {"gaussian": GaussianMarginal, "uniform": UniformMarginal}


@dataclass(frozen=True)
class SharpnessConfig:
    """Inputs for the tightness simulation.

    ``size_dist`` is the distribution of the relative selected-set size and
    must have a strictly increasing partial moment on [0, 1] (atoms or flat
    stretches break the construction and are rejected).
    """

    alpha0: float
    size_dist: object = field(default_factory=UniformSizeDistribution)
    grid_n: int = 100_000
    marginal: object = "gaussian"
    trials: int = 1000
    seed: int = DEFAULT_SEED

    def __post_init__(self):
        if not 0.0 < self.alpha0 < 1.0:
            raise ValueError(f"alpha0 must lie in (0, 1), got {self.alpha0}")
        if self.grid_n < 100:
            raise ValueError(f"grid must have >= 100 points, got {self.grid_n}")
        if self.trials < 1:
            raise ValueError(f"need at least one trial, got {self.trials}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")


@dataclass(frozen=True)
class SharpnessModel:
    """Frozen construction: quantile map, cut point, and grid geometry."""

    alpha0: float
    size_dist: object
    marginal: object
    grid_n: int
    beta_total: float
    y_cut: float

    def upper_value(self, u: float) -> float:
        """Arc height for arc mass u: upper quantile at level alpha0 * beta(u / alpha0).

        Decreasing in u: rarer (smaller) arcs must reach higher to stay
        undetectable at their size.
        """
        return self.marginal.upper_quantile(
            self.alpha0 * self.size_dist.beta(u / self.alpha0)
        )

    def threshold_at_set_size(self, s: float) -> float:
        """Rejection threshold at relative set size s.

        Algebraically upper_quantile(alpha0 * beta(s)); evaluated through
        :meth:`upper_value` so that an arc of mass alpha0 * s reproduces it
        bit for bit.
        """
        return self.upper_value(self.alpha0 * s)

    def sample_below_cut(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Marginal samples conditioned strictly below the cut, by rejection."""
        out = np.empty(size)
        filled = 0
        while filled < size:
            need = size - filled
            draw = self.marginal.sample(rng, max(64, need + need // 4 + 16))
            keep = draw[draw < self.y_cut]
            take = min(keep.size, need)
            out[filled:filled + take] = keep[:take]
            filled += take
        return out


@dataclass(frozen=True)
class SharpnessTrial:
    """One trial: arc placement, realized set size, and its false-positive rate."""

    x: float
    u: float
    set_size: float
    fpr: float
    degenerate: bool
    values: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class SharpnessSummary:
    """Aggregate over trials; degenerate trials are excluded from the mean."""

    alpha0: float
    grid_n: int
    trials: int
    degenerate_trials: int
    mean_fpr: float
    std_error: float
    ks_set_size: float
    seed: int
    trial_u: np.ndarray = field(repr=False)
    trial_set_size: np.ndarray = field(repr=False)
    trial_fpr: np.ndarray = field(repr=False)
    trial_degenerate: np.ndarray = field(repr=False)


def build_construction(config: SharpnessConfig) -> SharpnessModel:
    """Validate the inputs and freeze the quantile map and cut point."""
    marginal = config.marginal
    if isinstance(marginal, str):
        try:
            marginal = _MARGINALS[marginal]()
        except KeyError:
            raise ValueError(f"unknown marginal {marginal!r}; "
                             f"choose from {sorted(_MARGINALS)}") from None
    probe = config.size_dist.beta(np.linspace(0.0, 1.0, 1001))
    if probe[0] != 0.0 or np.any(np.diff(probe) <= 0.0):
        raise ValueError(
            "set-size distribution must have a strictly increasing partial "
            "moment on [0, 1] starting at 0"
        )
    beta_total = float(config.size_dist.beta(1.0))
    y_cut = marginal.upper_quantile(config.alpha0 * beta_total)
    return SharpnessModel(
        alpha0=config.alpha0, size_dist=config.size_dist, marginal=marginal,
        grid_n=config.grid_n, beta_total=beta_total, y_cut=y_cut,
    )


def run_trial(model: SharpnessModel, trial_seed, keep_values: bool = False) -> SharpnessTrial:
    """Drop one arc, build the grid values, and measure the realized FPR.

    The arc starts at a uniform point x and has mass u = alpha0 * v where v
    is the drawn set size; grid points in [x, x + u) carry the arc height
    and all others carry conditioned marginal samples.  A trial whose
    selected set captures no grid point is flagged degenerate.
    """
    rng = np.random.default_rng(trial_seed)
    n = model.grid_n
    x = float(rng.random())
    v = float(model.size_dist.sample(rng))
    u = model.alpha0 * v
    start = math.ceil(n * x)
    n_selected = math.ceil(n * (x + v)) - start
    n_arc = math.ceil(n * (x + u)) - start
    if n_selected <= 0:
        return SharpnessTrial(x=x, u=u, set_size=0.0, fpr=0.0, degenerate=True)
    values = model.sample_below_cut(rng, n)
    arc_height = model.upper_value(u)
    values[(start + np.arange(n_arc)) % n] = arc_height
    selected = (start + np.arange(n_selected)) % n
    threshold = model.threshold_at_set_size(v)
    bad = int(np.count_nonzero(values[selected] >= threshold))
    return SharpnessTrial(
        x=x, u=u, set_size=n_selected / n, fpr=bad / n_selected,
        degenerate=False, values=values if keep_values else None,
    )


def estimate(config: SharpnessConfig) -> SharpnessSummary:
    """Mean realized FPR across trials, with a KS check on the set sizes."""
    model = build_construction(config)
    us = np.empty(config.trials)
    sizes = np.empty(config.trials)
    fprs = np.empty(config.trials)
    degenerate = np.zeros(config.trials, dtype=bool)
    for t in range(config.trials):
        trial = run_trial(model, [config.seed, t])
        us[t] = trial.u
        sizes[t] = trial.set_size
        fprs[t] = trial.fpr
        degenerate[t] = trial.degenerate
    used = fprs[~degenerate]
    if used.size == 0:
        raise ValueError("every trial degenerated; the grid is too coarse "
                         "for this size distribution")
    std_error = float(used.std(ddof=1) / math.sqrt(used.size)) if used.size > 1 else 0.0
    for a in (us, sizes, fprs, degenerate):
        a.flags.writeable = False
    return SharpnessSummary(
        alpha0=config.alpha0, grid_n=config.grid_n, trials=config.trials,
        degenerate_trials=int(degenerate.sum()), mean_fpr=float(used.mean()),
        std_error=std_error, ks_set_size=ks_distance(sizes, config.size_dist.cdf),
        seed=config.seed, trial_u=us, trial_set_size=sizes, trial_fpr=fprs,
        trial_degenerate=degenerate,
    )
