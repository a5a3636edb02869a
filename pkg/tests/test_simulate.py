import math

import numpy as np
import pytest
from scipy.special import erfc
from scipy.stats import norm

from hammer.multitest import bh_baseline, by_baseline
from hammer.priors import continuous_prior_uniform01, size_prior_dirac
from hammer.simulate import (
    McEstimate,
    ScenarioSpec,
    estimate_fdr,
    generate_pvalues,
    ks_distance,
    top_k_rule,
    trial_rng,
    validate_classifier_coverage,
    validate_constant_volume,
    validate_hammer_joint,
)


class TestScenarioSpec:
    def test_m0_bounds(self):
        with pytest.raises(ValueError):
            ScenarioSpec(m=5, m0=6)
        with pytest.raises(ValueError):
            ScenarioSpec(m=5, m0=-1)

    def test_rho_validity(self):
        ScenarioSpec(m=5, m0=5, rho=-0.2)  # -1/(m-1) = -0.25, inside
        with pytest.raises(ValueError, match="correlation"):
            ScenarioSpec(m=5, m0=5, rho=-0.25)
        with pytest.raises(ValueError, match="correlation"):
            ScenarioSpec(m=1, m0=1, rho=0.3)
        with pytest.raises(ValueError):
            ScenarioSpec(m=5, m0=5, rho=1.5)

    def test_counts(self):
        with pytest.raises(ValueError):
            ScenarioSpec(m=0, m0=0)
        with pytest.raises(ValueError):
            ScenarioSpec(m=5, m0=5, trials=0)
        with pytest.raises(ValueError):
            ScenarioSpec(m=5, m0=5, seed=-1)


class TestGeneratePvalues:
    def test_deterministic_per_trial(self):
        spec = ScenarioSpec(m=10, m0=6, seed=123)
        first = generate_pvalues(spec, 7)
        again = generate_pvalues(spec, 7)
        assert np.array_equal(first.p_values, again.p_values)
        other = generate_pvalues(spec, 8)
        assert not np.array_equal(first.p_values, other.p_values)

    def test_null_mask_marks_first_m0(self):
        pool = generate_pvalues(ScenarioSpec(m=8, m0=3), 0)
        assert pool.null_mask.tolist() == [True] * 3 + [False] * 5

    def test_rho_zero_matches_plain_gaussians(self):
        # the rho <= 0 mixing path must collapse exactly at rho = 0, and
        # passing [seed, t] reproduces the validators' internal trial t
        spec = ScenarioSpec(m=6, m0=4, effect=2.0, rho=0.0, seed=9)
        pool = generate_pvalues(spec, [9, 3])
        rng = trial_rng(9, 3)
        z = rng.standard_normal(6)
        z[4:] += 2.0
        expected = 0.5 * erfc(z / math.sqrt(2.0))
        assert np.array_equal(pool.p_values, expected)

    def test_null_pvalues_uniform(self):
        spec = ScenarioSpec(m=50, m0=50, seed=2)
        pooled = np.concatenate(
            [generate_pvalues(spec, t).p_values for t in range(200)])
        assert ks_distance(pooled, lambda x: np.clip(x, 0.0, 1.0)) < 0.02

    def test_alternatives_shift_down(self):
        spec = ScenarioSpec(m=40, m0=20, effect=3.0, seed=4)
        pools = [generate_pvalues(spec, t) for t in range(50)]
        null_mean = np.mean([p.p_values[:20].mean() for p in pools])
        alt_mean = np.mean([p.p_values[20:].mean() for p in pools])
        assert alt_mean < 0.05 < 0.45 < null_mean

    def test_positive_rho_correlates(self):
        spec = ScenarioSpec(m=2, m0=2, rho=0.6, seed=11)
        z = np.array([norm.isf(generate_pvalues(spec, t).p_values)
                      for t in range(4000)])
        r = np.corrcoef(z[:, 0], z[:, 1])[0, 1]
        assert abs(r - 0.6) < 0.05

    def test_negative_rho_shrinks_mean_variance(self):
        # var(mean of m equicorrelated) = (1 + (m-1) rho) / m
        m, rho = 10, -0.09
        spec = ScenarioSpec(m=m, m0=m, rho=rho, seed=13)
        z = np.array([norm.isf(generate_pvalues(spec, t).p_values)
                      for t in range(4000)])
        got = z.mean(axis=1).var()
        want = (1 + (m - 1) * rho) / m
        assert got == pytest.approx(want, abs=0.004)


class TestEstimateFdr:
    def test_alpha_zero_is_exactly_zero(self):
        spec = ScenarioSpec(m=10, m0=10, trials=50)
        est = estimate_fdr(spec, 0.0)
        assert est.value == 0.0 and est.std_error == 0.0

    def test_no_nulls_means_no_false_discoveries(self):
        spec = ScenarioSpec(m=10, m0=0, trials=50)
        assert estimate_fdr(spec, 0.2).value == 0.0

    def test_deterministic(self):
        spec = ScenarioSpec(m=20, m0=15, trials=100, seed=31)
        a = estimate_fdr(spec, 0.1)
        b = estimate_fdr(spec, 0.1)
        assert a.value == b.value and a.std_error == b.std_error
        assert a.trials == 100 and a.seed == 31

    def test_controls_fdr_all_null(self):
        spec = ScenarioSpec(m=20, m0=20, trials=400, seed=5)
        est = estimate_fdr(spec, 0.1)
        assert est.value <= 0.1 + 3 * est.std_error

    def test_procedures_dispatch(self):
        spec = ScenarioSpec(m=15, m0=10, trials=60, seed=8)
        for name in ("hammer", "bh", "by"):
            est = estimate_fdr(spec, 0.2, procedure=name)
            assert est.trials == 60
        with pytest.raises(ValueError, match="procedure"):
            estimate_fdr(spec, 0.2, procedure="holm")

    def test_bh_rejections_contain_by(self):
        spec = ScenarioSpec(m=25, m0=15, seed=19)
        for t in range(80):
            pool = generate_pvalues(spec, t)
            assert by_baseline(pool, 0.15).rejected <= bh_baseline(pool, 0.15).rejected


class TestConstantVolume:
    def test_matches_level_when_reporting_everything(self):
        # a = m with uniform weights: every hypothesis checked at delta/m,
        # so the expected false-positive count is exactly delta
        spec = ScenarioSpec(m=12, m0=12, trials=2000, seed=23)
        est = validate_constant_volume(spec, a=12, delta=0.2)
        assert est.value == pytest.approx(0.2, abs=4 * est.std_error)

    def test_bounded_for_small_a(self):
        spec = ScenarioSpec(m=50, m0=50, trials=1000, seed=29)
        est = validate_constant_volume(spec, a=5, delta=0.1)
        assert est.value <= 0.1 + 3 * est.std_error

    def test_a_validated(self):
        spec = ScenarioSpec(m=10, m0=10, trials=10)
        for a in (0, 11, -2):
            with pytest.raises(ValueError, match="selection size"):
                validate_constant_volume(spec, a=a, delta=0.1)

    def test_delta_validated(self):
        spec = ScenarioSpec(m=10, m0=10, trials=10)
        with pytest.raises(ValueError):
            validate_constant_volume(spec, a=2, delta=0.0)


class TestHammerJoint:
    def test_dirac_with_top_k_matches_constant_volume(self):
        # reporting a fixed-size set through the joint validator with a
        # Dirac size prior is the constant-volume check in disguise
        a, m = 3, 30
        spec = ScenarioSpec(m=m, m0=m, trials=1500, seed=37)
        joint = validate_hammer_joint(spec, top_k_rule(a), size_prior_dirac(a, m),
                                      delta=0.15)
        plain = validate_constant_volume(spec, a=a, delta=0.15)
        spread = math.hypot(joint.std_error, plain.std_error)
        assert joint.value == pytest.approx(plain.value, abs=4 * spread)

    def test_controls_joint_rate(self):
        spec = ScenarioSpec(m=40, m0=40, trials=1500, seed=41)
        est = validate_hammer_joint(spec, top_k_rule(4),
                                    continuous_prior_uniform01(), delta=0.1)
        assert est.value <= 0.1 + 3 * est.std_error

    def test_rule_must_return_distribution(self):
        spec = ScenarioSpec(m=10, m0=10, trials=5)

        def broken(p_values, rng):
            return np.full(10, 0.3)

        with pytest.raises(ValueError, match="sum to one"):
            validate_hammer_joint(spec, broken, size_prior_dirac(1, 10), delta=0.1)


class TestClassifierCoverage:
    def test_uniform_rule_uses_base_budget(self):
        # uniform selection has density one, so the budget never inflates
        est = validate_classifier_coverage(
            n=50, delta=0.1, true_errors=np.full(8, 0.3), trials=500, seed=43)
        assert est.value <= 0.1 + 3 * est.std_error

    def test_spiky_rule_still_covered(self):
        def greedy(empirical, rng):
            theta = np.zeros_like(empirical)
            theta[np.argmin(empirical)] = 1.0
            return theta

        est = validate_classifier_coverage(
            n=100, delta=0.05, true_errors=np.linspace(0.1, 0.5, 20),
            rule=greedy, trials=500, seed=47)
        assert est.value <= 0.05 + 3 * est.std_error

    def test_errors_validated(self):
        with pytest.raises(ValueError):
            validate_classifier_coverage(n=10, delta=0.1, true_errors=[0.2, 1.4],
                                         trials=5)


class TestHelpers:
    def test_trial_rng_streams_are_stable(self):
        a = trial_rng(5, 0).random(4)
        b = trial_rng(5, 0).random(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, trial_rng(5, 1).random(4))
        assert not np.array_equal(a, trial_rng(6, 0).random(4))

    def test_mc_estimate_validated(self):
        with pytest.raises(ValueError):
            McEstimate(trials=10, value=0.1, std_error=-0.01, seed=1)
        with pytest.raises(ValueError):
            McEstimate(trials=0, value=0.1, std_error=0.0, seed=1)

    def test_ks_distance_known_values(self):
        uniform = lambda x: np.clip(x, 0.0, 1.0)
        assert ks_distance(np.array([0.25, 0.75]), uniform) == pytest.approx(0.25)
        assert ks_distance(np.array([0.5]), uniform) == pytest.approx(0.5)

    def test_ks_distance_empty(self):
        with pytest.raises(ValueError):
            ks_distance(np.array([]), lambda x: x)
