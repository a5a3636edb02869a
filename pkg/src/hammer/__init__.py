"""Occam's-hammer toolkit.

Prior-weighted step-up multiple testing with distribution-free FDR control,
error bounds for randomly selected classifiers, a worst-case tightness
construction, and Monte Carlo validators for every guarantee the procedures
carry.  ``STEPUP_BACKEND`` reports whether the compiled fixpoint kernel or
the pure numpy fallback is active.
"""

from ._stepup import BACKEND as STEPUP_BACKEND
from .bounds import (
    ClassifierBoundReport,
    binomial_tail_inverse,
    chernoff_violation,
    classifier_bound_report,
    hammer_classifier_budget,
    kl_bernoulli_plus,
    kl_upper_inverse,
)
from .multitest import (
    HypothesisPool,
    StepUpResult,
    bh_baseline,
    brute_force_sup,
    by_baseline,
    markov_confidence,
    realized_fdp,
    step_up,
)
from .priors import (
    ComplexityPrior,
    ContinuousPrior,
    SizePrior,
    beta_inverse,
    complexity_prior_custom,
    complexity_prior_from_csv,
    complexity_prior_uniform,
    continuous_prior_power,
    continuous_prior_table,
    continuous_prior_uniform01,
    harmonic_number,
    level_function,
    size_prior_by,
    size_prior_custom,
    size_prior_dirac,
    size_prior_from_csv,
    size_prior_uniform,
)
from .sharpness import (
    SharpnessConfig,
    SharpnessSummary,
    SharpnessTrial,
    build_construction,
    run_trial,
)
from .sharpness import estimate as estimate_sharpness
from .simulate import (
    DEFAULT_SEED,
    McEstimate,
    ScenarioSpec,
    estimate_fdr,
    generate_pvalues,
    validate_classifier_coverage,
    validate_constant_volume,
    validate_hammer_joint,
)

__version__ = "0.1.0"
