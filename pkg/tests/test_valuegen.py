from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st
from hypothesis.extra.numpy import arrays
from scipy import stats

from krom.exceptions import DegenerateValues, DomainError, SkewnessOutOfRange, SourceTooNarrow
from krom.valuegen import (
    NIG,
    Beta4,
    BootstrapSource,
    Normal,
    ParametricSource,
    SkewNormal,
    StudentT,
    ZeroSource,
    adjust_values,
    beta4_params_for_skewness,
    beta_skewness,
    draw_raw,
    family_for_skewness,
    make_value_source,
    nig_params_for_skewness,
    sn_params_for_skewness,
    sn_skewness,
)


class TestAdjust:
    def test_worked_example(self):
        np.testing.assert_allclose(adjust_values([1, 2, 3], 0.5), [-0.61237243569579, 0, 0.61237243569579])

    def test_unit_sigma_standardizes(self, rng):
        z = rng.gamma(2, size=50)
        np.testing.assert_allclose(adjust_values(z, 1.0), (z - z.mean()) / z.std())

    @given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-1e3, 1e3)),
           st.floats(0.05, 1.0))
    def test_mean_and_sd(self, z, sigma):
        assume(np.std(z) > 1e-6)
        w = adjust_values(z, sigma)
        assert abs(w.mean()) <= 1e-12
        assert w.std() == pytest.approx(sigma, rel=1e-10)

    def test_degenerate(self):
        with pytest.raises(DegenerateValues):
            adjust_values([2.0, 2.0, 2.0], 0.5)
        with pytest.raises(DegenerateValues):
            adjust_values([2.0], 0.5)


class TestSources:
    def test_zero(self, rng):
        assert ZeroSource().values(7, 0, rng).tolist() == [0.0] * 7
        assert draw_raw(ZeroSource(), 7, 0, rng).tolist() == [0.0] * 7

    def test_bootstrap_ecdf(self, rng):
        col = rng.normal(size=10)
        src = BootstrapSource(np.column_stack([col, col]), sigma=1.0)
        draws = draw_raw(src, 100_000, 0, rng)
        # Dvoretzky-Kiefer-Wolfowitz band at 99%
        eps = math.sqrt(math.log(2 / 0.01) / (2 * draws.size))
        grid = np.sort(col)
        emp = np.searchsorted(np.sort(draws), grid, side="right") / draws.size
        ref = np.arange(1, 11) / 10
        assert np.max(np.abs(emp - ref)) <= eps

    def test_bootstrap_columns_independent(self, rng):
        src = BootstrapSource(rng.normal(size=(50, 2)), sigma=1.0)
        a = draw_raw(src, 100_000, 0, rng)
        b = draw_raw(src, 100_000, 1, rng)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.02

    def test_bootstrap_too_narrow(self, rng):
        src = BootstrapSource(rng.normal(size=(5, 2)))
        with pytest.raises(SourceTooNarrow):
            src.values(3, 2, rng)
        with pytest.raises(SourceTooNarrow):
            BootstrapSource(np.ones((1, 2)))

    def test_normal_skewness(self, rng):
        z = draw_raw(ParametricSource(Normal()), 100_000, 0, rng)
        assert abs(stats.skew(z)) < 3 * math.sqrt(6 / z.size)

    def test_adjusted_values(self, rng):
        w = ParametricSource(Normal(), sigma=0.7).values(30, 0, rng)
        assert w.std() == pytest.approx(0.7)
        assert abs(w.mean()) < 1e-14

    def test_short_draws_are_zero(self, rng):
        src = ParametricSource(Normal(), sigma=0.7)
        assert src.values(1, 0, rng).tolist() == [0.0]
        assert src.values(0, 0, rng).size == 0

    def test_sigma_above_one_warns(self):
        with pytest.warns(UserWarning):
            ParametricSource(Normal(), sigma=1.01)
        with pytest.raises(DomainError):
            ParametricSource(Normal(), sigma=0.0)

    def test_per_column_families(self, rng):
        src = make_value_source("nig", 0.5, p=[1.0, -1.0])
        assert src.family(0).beta > 0 > src.family(1).beta
        with pytest.raises(SourceTooNarrow):
            src.values(5, 2, rng)

    def test_make_value_source_kinds(self, rng):
        for kind in ("zero", "normal", "t"):
            assert make_value_source(kind, 0.5).values(10, 0, rng).shape == (10,)
        with pytest.warns(UserWarning):
            sn = make_value_source("sn", 0.5, p=[-2.0, 0.1])
        assert sn.family(0).moments()[2] == pytest.approx(-(0.995 - 1e-3), abs=1e-6)
        with pytest.raises(ValueError):
            make_value_source("gamma", 0.5)
        with pytest.raises(SourceTooNarrow):
            make_value_source("bootstrap", 0.5)


class TestStandardizedFamilies:
    def _check(self, family, p1):
        mean, var, skew = family.moments()
        assert abs(mean) < 1e-6 and abs(var - 1) < 1e-6 and abs(skew - p1) < 1e-6

    def test_sn_symmetric(self):
        assert sn_params_for_skewness(0.0) == (0.0, 1.0, 0.0)

    @pytest.mark.parametrize("p1", [-0.9, -0.5, -0.1, 0.1, 0.5, 0.9, 0.99])
    def test_sn_round_trip(self, p1):
        xi, omega, alpha = sn_params_for_skewness(p1)
        delta = alpha / math.sqrt(1 + alpha * alpha)
        assert sn_skewness(delta) == pytest.approx(p1, abs=1e-8)
        self._check(SkewNormal(xi, omega, alpha), p1)

    @pytest.mark.parametrize("p1", [0.995, 0.996, -1.2])
    def test_sn_range(self, p1):
        with pytest.raises(SkewnessOutOfRange, match="skewness out of range"):
            sn_params_for_skewness(p1)

    def test_nig_worked_example(self):
        alpha, beta, delta, mu = nig_params_for_skewness(1.0)
        assert beta == pytest.approx(1 / 3)
        assert alpha == pytest.approx(math.sqrt(10) / 3)
        assert 3 * beta / (alpha**2 - beta**2) == pytest.approx(1.0)

    @pytest.mark.parametrize("p1", [-50, -10, -2, -0.5, 0.0, 0.5, 2, 10, 50])
    def test_nig_round_trip(self, p1):
        params = nig_params_for_skewness(p1)
        assert all(map(math.isfinite, params))
        self._check(NIG(*params), p1)

    @pytest.mark.parametrize("p1", [-5, -1.5, 0.0, 1.5, 5, 12])
    def test_beta_round_trip(self, p1):
        alpha, beta, b, c = beta4_params_for_skewness(p1)
        assert abs(alpha * c + beta * b) < 1e-10
        assert beta_skewness(alpha, beta) == pytest.approx(p1, abs=1e-8)
        self._check(Beta4(alpha, beta, b, c), p1)

    def test_beta_symmetric(self):
        alpha, beta, b, c = beta4_params_for_skewness(0.0)
        assert alpha == beta == 2.0
        assert b == pytest.approx(-c)

    @given(st.floats(-0.98, 0.98))
    def test_sn_property(self, p1):
        self._check(family_for_skewness("sn", p1), p1)

    @given(st.floats(-20, 20))
    def test_beta_property(self, p1):
        self._check(family_for_skewness("beta", p1), p1)

    def test_normal_only_zero(self):
        with pytest.raises(SkewnessOutOfRange):
            family_for_skewness("normal", 0.3)

    def test_student_t_domain(self):
        with pytest.raises(DomainError):
            StudentT(nu=5.0)
        assert StudentT(nu=4.0, min_nu=3.5).nu == 4.0
        with pytest.raises(DomainError):
            StudentT(nu=3.5, min_nu=2.0)
        assert StudentT().moments()[2] == 0.0

    def test_sampled_moments(self, rng):
        fam = family_for_skewness("nig", 1.0)
        z = fam.rvs(200_000, rng)
        assert abs(z.mean()) < 0.02 and abs(z.var() - 1) < 0.03 and abs(stats.skew(z) - 1) < 0.1
