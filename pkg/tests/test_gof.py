import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from hawkes2s.core import EventSeries, ExpHawkesParams, HawkesError, TradingCalendar, compensator_at
from hawkes2s.gof import (
    interarrival_stats,
    kolmogorov_sf,
    ks_exp1,
    qq_points,
    rescale_times,
    rescaled_durations,
)
from hawkes2s.simulate import SimConfig, simulate_hawkes

from conftest import random_daygap_series, random_params


class TestRescale:
    def test_poisson_is_linear(self):
        s = EventSeries([[0.5, 1.5, 4.0]], 5.0)
        p = ExpHawkesParams([0.7], [[0.0]], [[1.0]])
        (r,) = rescale_times(p, s)
        np.testing.assert_allclose(r, 0.7 * s.times[0], rtol=1e-15)

    def test_matches_compensator_at(self):
        rng = np.random.default_rng(4)
        p = random_params(rng, 3)
        s, cal = random_daygap_series(rng, 3, 6, 3)
        out = rescale_times(p, s, cal)
        for m in range(3):
            expected = [compensator_at(p, s, t, m, cal) for t in s.times[m]]
            np.testing.assert_allclose(out[m], expected, rtol=1e-12)

    def test_dimension_mismatch(self, bench_params):
        with pytest.raises(HawkesError):
            rescale_times(bench_params, EventSeries([[1.0]], 2.0))

    def test_strictly_increasing(self, bench_params):
        s = simulate_hawkes(bench_params, SimConfig(seed=0, horizon=3000.0))
        for r in rescale_times(bench_params, s):
            assert np.all(np.diff(r) > 0)

    def test_unit_rate_under_true_model(self, bench_params):
        s = simulate_hawkes(bench_params, SimConfig(seed=1, horizon=20000.0))
        for d in rescaled_durations(bench_params, s):
            assert d.size >= 2000
            assert d.mean() == pytest.approx(1.0, abs=0.05)

    def test_true_model_passes_poisson_model_fails(self, bench_params):
        s = simulate_hawkes(bench_params, SimConfig(seed=2, horizon=5000.0))
        for d in rescaled_durations(bench_params, s):
            assert ks_exp1(d)[1] > 0.01
        rates = np.array(s.counts) / s.horizon
        poisson = ExpHawkesParams(rates, np.zeros((2, 2)), np.ones((2, 2)))
        for d in rescaled_durations(poisson, s):
            assert ks_exp1(d)[1] < 0.01


class TestKS:
    def test_quantiles(self):
        n = 1000
        d = -np.log1p(-np.arange(1, n + 1) / (n + 1))
        stat, p = ks_exp1(d)
        assert stat < 0.01 and p > 0.5

    def test_matches_scipy(self):
        d = np.random.default_rng(0).exponential(1.0, 500)
        stat, p = ks_exp1(d)
        ref = stats.kstest(d, "expon", method="asymp")
        assert stat == pytest.approx(ref.statistic, rel=1e-12)
        assert p == pytest.approx(stats.kstwobign.sf(np.sqrt(500) * stat), rel=1e-9)

    def test_kolmogorov_sf(self):
        for x in (0.3, 0.8, 1.36, 2.0):
            assert kolmogorov_sf(x) == pytest.approx(stats.kstwobign.sf(x), abs=1e-12)

    def test_calibration(self):
        rejections = sum(ks_exp1(np.random.default_rng(s).exponential(1.0, 1000))[1] < 0.05 for s in range(500))
        assert 0.03 <= rejections / 500 <= 0.08

    def test_power(self):
        hits = sum(ks_exp1(np.random.default_rng(s).exponential(0.5, 1000))[1] < 0.001 for s in range(200))
        assert hits / 200 >= 0.99

    def test_input_validation(self):
        with pytest.raises(HawkesError):
            ks_exp1([1.0] * 5)
        with pytest.raises(HawkesError):
            ks_exp1([1.0] * 10 + [-1.0])

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1))
    def test_permutation_invariant(self, seed):
        rng = np.random.default_rng(seed)
        d = rng.exponential(1.0, 50)
        assert ks_exp1(d) == ks_exp1(rng.permutation(d))


class TestQQ:
    def test_single(self):
        np.testing.assert_allclose(qq_points([2.5]), [[-np.log(0.5), 2.5]])

    def test_perfect_sample(self):
        n = 400
        d = -np.log1p(-(np.arange(1, n + 1) - 0.5) / n)
        q = qq_points(np.random.default_rng(1).permutation(d))
        assert np.max(np.abs(q[:, 0] - q[:, 1])) < 1e-12

    def test_fitted_residuals_near_diagonal(self, bench_params):
        s = simulate_hawkes(bench_params, SimConfig(seed=3, horizon=10000.0))
        for d in rescaled_durations(bench_params, s):
            q = qq_points(d)
            n = len(q)
            mid = q[int(0.05 * n):int(0.95 * n)]
            assert n >= 1000
            assert np.max(np.abs(mid[:, 1] - mid[:, 0])) < 0.25

    def test_empty(self):
        with pytest.raises(HawkesError):
            qq_points([])


class TestInterarrival:
    def test_equally_spaced(self):
        st_ = interarrival_stats(EventSeries([[0, 60, 120, 180]], 200.0), 0)
        assert (st_.mean, st_.std, st_.q1, st_.q2, st_.q3, st_.count) == (60, 0, 60, 60, 60, 4)

    def test_hand_computed(self):
        st_ = interarrival_stats(EventSeries([[0, 1, 3, 7]], 10.0), 0)
        assert st_.mean == pytest.approx(7 / 3)
        assert st_.q2 == 2.0
        assert st_.q1 == 1.5 and st_.q3 == 3.0

    def test_too_few(self):
        with pytest.raises(HawkesError):
            interarrival_stats(EventSeries([[1.0]], 2.0), 0)


def test_daygap_rescale_flat_overnight():
    cal = TradingCalendar([(0.0, 10.0), (50.0, 60.0)])
    s = EventSeries([[1.0, 9.0, 51.0]], 60.0)
    p = ExpHawkesParams([0.2], [[0.5]], [[0.4]])
    r = rescale_times(p, s, cal)[0]
    assert r[2] - r[1] == pytest.approx(compensator_at(p, s, 51.0, 0, cal) - compensator_at(p, s, 9.0, 0, cal))
    assert compensator_at(p, s, 10.0, 0, cal) == compensator_at(p, s, 50.0, 0, cal)
