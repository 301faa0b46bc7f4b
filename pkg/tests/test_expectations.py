"""EWMA estimator update order and series helper."""

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from stablesim import EwmaEstimator, stablecoin_estimators, update

price = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False, allow_infinity=False)
weight = st.floats(min_value=0.0, max_value=1.0)


def fresh(memory=0.5, mean_return=1.0, mean_log=0.0, variance=0.0, return_memory=None):
    return EwmaEstimator(memory=memory, mean_return=mean_return, mean_log=mean_log,
                         variance=variance, return_memory=return_memory)


class TestValidation:
    def test_ranges(self):
        with pytest.raises(ValueError):
            fresh(memory=1.5)
        with pytest.raises(ValueError):
            fresh(return_memory=-0.1)
        with pytest.raises(ValueError):
            fresh(variance=-1e-12)
        with pytest.raises(ValueError):
            fresh(mean_return=0.0)

    def test_update_rejects_nonpositive_prices(self):
        with pytest.raises(ValueError):
            update(fresh(), 0.0, 1.0)
        with pytest.raises(ValueError):
            update(fresh(), 1.0, -1.0)

    def test_series_rejects_empty_and_nonpositive(self):
        with pytest.raises(ValueError):
            stablecoin_estimators([], 0.0, 0.0, 0.5)
        with pytest.raises(ValueError):
            stablecoin_estimators([1.0, 0.0], 0.0, 0.0, 0.5)


class TestUpdateOrder:
    def test_variance_uses_freshly_updated_mean(self):
        # one observed log return of 0.1 against zero priors at memory 0.5:
        # mean moves to 0.05 first, so the residual is 0.05, giving variance
        # 0.5 * 0.05^2 = 0.00125 (a stale-mean residual of 0.1 would give 0.005)
        est = update(fresh(memory=0.5), 1.0, math.exp(0.1))
        assert est.mean_log == pytest.approx(0.05, rel=1e-12)
        assert est.variance == pytest.approx(0.00125, rel=1e-12)

    def test_separate_return_memory(self):
        est = fresh(memory=0.5, mean_return=1.0, return_memory=0.25)
        assert est.effective_return_memory == 0.25
        out = update(est, 1.0, 2.0)
        assert out.mean_return == pytest.approx(0.75 * 1.0 + 0.25 * 2.0, rel=1e-12)
        # log-return side still uses the primary weight
        assert out.mean_log == pytest.approx(0.5 * math.log(2.0), rel=1e-12)

    def test_shared_memory_by_default(self):
        est = fresh(memory=0.3)
        assert est.effective_return_memory == 0.3

    def test_volatility_property(self):
        assert fresh(variance=0.04).volatility == pytest.approx(0.2, rel=1e-15)


class TestRecursionProperties:
    @given(memory=weight, mean_log=st.floats(-1, 1), variance=st.floats(0, 1),
           p0=price, p1=price)
    def test_variance_stays_nonnegative(self, memory, mean_log, variance, p0, p1):
        out = update(fresh(memory=memory, mean_log=mean_log, variance=variance), p0, p1)
        assert out.variance >= 0.0

    @given(p0=price, p1=price)
    def test_zero_memory_freezes_beliefs(self, p0, p1):
        est = fresh(memory=0.0, mean_return=1.2, mean_log=0.3, variance=0.7)
        out = update(est, p0, p1)
        assert (out.mean_return, out.mean_log, out.variance) == (1.2, 0.3, 0.7)

    @given(p0=price, p1=price)
    def test_full_memory_tracks_observation(self, p0, p1):
        # weight one snaps the mean to the newest log return, so the fresh
        # residual (and hence the variance) collapses to zero
        out = update(fresh(memory=1.0, variance=0.5), p0, p1)
        assert out.mean_return == pytest.approx(p1 / p0, rel=1e-12)
        assert out.mean_log == pytest.approx(math.log(p1 / p0), rel=1e-12, abs=1e-12)
        assert out.variance == 0.0

    @given(memory=weight, prices=st.lists(price, min_size=1, max_size=8))
    def test_series_matches_repeated_update(self, memory, prices):
        series = stablecoin_estimators(prices, 0.01, 0.02, memory)
        est = EwmaEstimator(memory=memory, mean_return=1.0, mean_log=0.01, variance=0.02)
        assert series[0] == (0.01, 0.02)
        for prev, cur, got in zip(prices, prices[1:], series[1:]):
            est = update(est, prev, cur)
            assert got == (est.mean_log, est.variance)

    def test_constant_ratio_fixed_point(self):
        # a geometric price series is a fixed point once beliefs match it
        r = 1.00583
        est = EwmaEstimator(memory=0.25, mean_return=r, mean_log=math.log(r), variance=0.0)
        p = 1.0
        for _ in range(50):
            est = update(est, p, p * r)
            p *= r
        # ulp-scale rounding in the recursion keeps a ~1e-33 variance residue
        assert est.mean_return == pytest.approx(r, rel=1e-13)
        assert est.mean_log == pytest.approx(math.log(r), rel=1e-13)
        assert est.variance <= 1e-30
