import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hammer.priors import (
    ComplexityPrior,
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

weights_lists = st.lists(
    st.floats(min_value=0.0, max_value=100.0, allow_nan=False), min_size=1, max_size=30
).filter(lambda w: sum(w) > 1e-9)


def test_harmonic_number_values():
    assert harmonic_number(1) == 1.0
    assert harmonic_number(4) == pytest.approx(25.0 / 12.0, rel=1e-15)
    with pytest.raises(ValueError):
        harmonic_number(0)


class TestComplexityPrior:
    def test_uniform(self):
        prior = complexity_prior_uniform(4)
        assert prior.m == 4
        np.testing.assert_allclose(prior.weights, 0.25, rtol=0)

    def test_custom_renormalizes(self):
        prior = complexity_prior_custom([2.0, 6.0])
        np.testing.assert_allclose(prior.weights, [0.25, 0.75], rtol=0)

    def test_already_normalized_untouched(self):
        prior = complexity_prior_custom([0.3, 0.7])
        assert prior.weights[0] == 0.3 and prior.weights[1] == 0.7

    @pytest.mark.parametrize("bad", [[], [-0.1, 1.1], [0.0, 0.0], [np.nan, 1.0]])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            complexity_prior_custom(bad)

    def test_uniform_bad_m(self):
        with pytest.raises(ValueError):
            complexity_prior_uniform(0)

    def test_weights_read_only(self):
        prior = complexity_prior_uniform(3)
        with pytest.raises(ValueError):
            prior.weights[0] = 0.5

    @given(weights_lists)
    def test_always_normalized(self, raw):
        prior = complexity_prior_custom(raw)
        assert abs(float(prior.weights.sum()) - 1.0) < 1e-9
        assert np.all(prior.weights >= 0.0)


class TestSizePriorBy:
    def test_m4_partial_moments(self):
        sp = size_prior_by(4)
        kappa = 25.0 / 12.0
        np.testing.assert_allclose(
            sp.beta_partial, [1 / kappa, 2 / kappa, 3 / kappa, 4 / kappa], rtol=1e-14
        )
        assert sp.beta(2) == pytest.approx(0.96, rel=1e-12)

    def test_gamma_harmonic(self):
        sp = size_prior_by(10)
        kappa = harmonic_number(10)
        np.testing.assert_allclose(sp.gamma, 1.0 / (np.arange(1, 11) * kappa), rtol=1e-15)
        assert float(sp.gamma.sum()) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("m", [1, 7, 100, 10_000])
    def test_beta_times_kappa_is_k(self, m):
        sp = size_prior_by(m)
        kappa = harmonic_number(m)
        k = np.arange(1, m + 1)
        np.testing.assert_allclose(sp.beta_partial * kappa, k, rtol=1e-12)


class TestSizePriorShapes:
    def test_uniform_closed_form(self):
        sp = size_prior_uniform(4)
        assert sp.beta(2) == 0.75
        assert sp.beta(4) == 2.5
        assert size_prior_uniform(1).beta(1) == 1.0

    def test_dirac(self):
        sp = size_prior_dirac(3, 5)
        np.testing.assert_array_equal(sp.beta_partial, [0.0, 0.0, 3.0, 3.0, 3.0])
        np.testing.assert_array_equal(sp.gamma, [0, 0, 1, 0, 0])

    @pytest.mark.parametrize("a,m", [(0, 5), (6, 5), (1, 0)])
    def test_dirac_invalid(self, a, m):
        with pytest.raises(ValueError):
            size_prior_dirac(a, m)

    def test_custom(self):
        sp = size_prior_custom([1.0, 1.0])
        np.testing.assert_array_equal(sp.beta_partial, [0.5, 1.5])

    @pytest.mark.parametrize("bad", [[], [0.0, 0.0], [-1.0, 2.0]])
    def test_custom_invalid(self, bad):
        with pytest.raises(ValueError):
            size_prior_custom(bad)

    @given(weights_lists)
    def test_partial_moment_invariants(self, raw):
        sp = size_prior_custom(raw)
        k = np.arange(1, sp.m + 1)
        assert np.all(np.diff(sp.beta_partial) >= -1e-15)
        assert np.all(sp.beta_partial <= k + 1e-9)
        assert sp.beta(0) == 0.0

    def test_beta_bounds_checked(self):
        sp = size_prior_uniform(3)
        with pytest.raises(ValueError):
            sp.beta(-1)
        with pytest.raises(ValueError):
            sp.beta(4)

    def test_beta_at_snaps_near_integers(self):
        sp = size_prior_dirac(7, 10)
        almost_seven = math.nextafter(7.0, 0.0)
        assert almost_seven < 7.0
        assert sp.beta_at(almost_seven) == 7.0
        assert sp.beta_at(6.5) == 0.0
        assert sp.beta_at(0.2) == 0.0
        assert sp.beta_at(25.0) == 7.0
        assert sp.beta_at(math.inf) == 7.0


class TestLevelFunction:
    def test_worked_value(self):
        assert level_function(0.05, 0.25, 0.48) == pytest.approx(0.006, rel=1e-12)

    def test_clamped_at_one(self):
        assert level_function(1.0, 1.0, 5.0) == 1.0

    def test_zero_budget(self):
        assert level_function(0.0, 0.5, 0.5) == 0.0

    @pytest.mark.parametrize("args", [(-0.1, 0.5, 0.5), (1.5, 0.5, 0.5),
                                      (0.5, -0.1, 0.5), (0.5, 0.5, -0.1)])
    def test_domain(self, args):
        with pytest.raises(ValueError):
            level_function(*args)

    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 5))
    def test_monotone_in_budget(self, delta, w, b):
        lo = level_function(delta * 0.5, w, b)
        hi = level_function(delta, w, b)
        assert lo <= hi <= 1.0


class TestContinuousPrior:
    def test_uniform01_values(self):
        nu = continuous_prior_uniform01()
        assert nu.beta(0.5) == 0.125
        assert nu.beta(1.0) == 0.5
        assert nu.beta(3.0) == 0.5
        assert nu.beta_ceiling() == 0.5

    def test_power_values(self):
        pw = continuous_prior_power(2)
        assert pw.beta(0.5) == pytest.approx(0.125, rel=1e-15)
        assert pw.beta_ceiling() == pytest.approx(0.5, rel=1e-15)
        pw3 = continuous_prior_power(3)
        assert pw3.beta(0.5) == pytest.approx(0.5 ** 1.5 / 3.0, rel=1e-14)
        assert pw3.beta(2.0) == pytest.approx(1.0 / 3.0, rel=1e-14)

    def test_power_needs_n_at_least_two(self):
        with pytest.raises(ValueError):
            continuous_prior_power(1)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            continuous_prior_uniform01().beta(-0.5)

    def test_table_renormalized_mass(self):
        # single rising segment on [0.1, 1]: slope s, mass s*ln(10) must be 1
        tab = continuous_prior_table([0.1, 1.0], [0.0, 0.9])
        expected_slope = 1.0 / math.log(10.0)
        assert tab.beta(1.0) == pytest.approx(expected_slope * 0.9, rel=1e-12)
        assert tab.beta(0.05) == 0.0
        mid = tab.beta(0.55)  # halfway up the segment
        assert mid == pytest.approx(tab.beta(1.0) * 0.5, rel=1e-12)

    def test_table_rejects_mass_at_origin(self):
        with pytest.raises(ValueError):
            continuous_prior_table([0.0, 1.0], [0.0, 1.0])

    def test_table_flat_leading_segment_ok(self):
        tab = continuous_prior_table([0.0, 0.2, 1.0], [0.0, 0.0, 0.8])
        assert tab.beta(0.1) == 0.0
        assert tab.beta(1.0) > 0.0

    @pytest.mark.parametrize("xs,bs", [
        ([0.5], [0.0]),
        ([0.2, 0.1], [0.0, 1.0]),
        ([0.1, 1.0], [0.1, 1.0]),
        ([0.1, 1.0], [0.0, -1.0]),
        ([0.1, 0.5, 1.0], [0.0, 0.0, 0.0]),
    ])
    def test_table_invalid(self, xs, bs):
        with pytest.raises(ValueError):
            continuous_prior_table(xs, bs)


class TestBetaInverse:
    def test_uniform01_known_points(self):
        nu = continuous_prior_uniform01()
        assert beta_inverse(nu, 0.125) == pytest.approx(0.5, abs=1e-12)
        assert beta_inverse(nu, 0.5) == pytest.approx(1.0, abs=1e-9)
        assert beta_inverse(nu, 0.0) == 0.0

    def test_out_of_range(self):
        nu = continuous_prior_uniform01()
        with pytest.raises(ValueError):
            beta_inverse(nu, 0.6)
        with pytest.raises(ValueError):
            beta_inverse(nu, -0.01)

    @pytest.mark.parametrize("prior", [
        continuous_prior_uniform01(),
        continuous_prior_power(5),
        continuous_prior_table([0.05, 0.3, 1.0], [0.0, 0.1, 0.7]),
    ])
    def test_roundtrip_identity(self, prior):
        rng = np.random.default_rng(7)
        lo = prior._increasing_from()
        for x in rng.uniform(lo, prior.x_max, size=100):
            x = float(x)
            back = beta_inverse(prior, prior.beta(x))
            assert abs(back - x) <= 1e-10

    def test_flat_interior_not_invertible(self):
        flat = continuous_prior_table(
            [0.05, 0.2, 0.5, 1.0], [0.0, 0.3, 0.3, 0.8])
        with pytest.raises(ValueError):
            beta_inverse(flat, 0.1)

    def test_table_y_zero_maps_to_rising_edge(self):
        tab = continuous_prior_table([0.1, 1.0], [0.0, 0.9])
        assert beta_inverse(tab, 0.0) == 0.1


class TestCsvLoaders:
    def test_size_prior_round_trip(self, tmp_path):
        path = tmp_path / "sizes.csv"
        path.write_text("index,weight\n1,0.5\n3,0.5\n")
        sp = size_prior_from_csv(path)
        assert sp.m == 3
        np.testing.assert_allclose(sp.gamma, [0.5, 0.0, 0.5])
        np.testing.assert_allclose(sp.beta_partial, [0.5, 0.5, 2.0])

    def test_size_prior_explicit_m(self, tmp_path):
        path = tmp_path / "sizes.csv"
        path.write_text("index,weight\n1,1.0\n")
        assert size_prior_from_csv(path, m=4).m == 4
        with pytest.raises(ValueError):
            size_prior_from_csv(path, m=0)

    @pytest.mark.parametrize("body", [
        "index,weight\n",                      # no rows
        "wrong,header\n1,1.0\n",               # bad header
        "index,weight\n0,1.0\n",               # index below 1
        "index,weight\n1,1.0\n1,2.0\n",        # duplicate
        "index,weight\nx,1.0\n",               # malformed
        "index,weight\n1,1.0,9\n",             # extra column
    ])
    def test_size_prior_errors(self, tmp_path, body):
        path = tmp_path / "bad.csv"
        path.write_text(body)
        with pytest.raises(ValueError):
            size_prior_from_csv(path)

    def test_complexity_prior_by_id(self, tmp_path):
        path = tmp_path / "weights.csv"
        path.write_text("hypothesis_id,weight\nb,3\na,1\n")
        prior = complexity_prior_from_csv(path, ["a", "b"])
        np.testing.assert_allclose(prior.weights, [0.25, 0.75])

    def test_complexity_prior_missing_id(self, tmp_path):
        path = tmp_path / "weights.csv"
        path.write_text("hypothesis_id,weight\na,1\n")
        with pytest.raises(ValueError, match="no weight"):
            complexity_prior_from_csv(path, ["a", "b"])

    def test_line_numbers_in_errors(self, tmp_path):
        path = tmp_path / "weights.csv"
        path.write_text("hypothesis_id,weight\na,1\nb,zzz\n")
        with pytest.raises(ValueError, match=":3:"):
            complexity_prior_from_csv(path, ["a", "b"])
