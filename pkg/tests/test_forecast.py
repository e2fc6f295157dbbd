import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from evciplan.forecast import (
    ForecastError,
    acf,
    adf_critical_5pct,
    adf_test,
    difference,
    fit,
    fitted,
    forecast,
    integrate,
    jarque_bera,
    pacf,
    residual_normality,
    residuals,
    rolling_forecast,
    score,
    select_order,
)


def ima21(n, theta=0.5, seed=0):
    e = np.random.default_rng(seed).standard_normal(n + 1)
    return np.cumsum(np.cumsum(e[1:] - theta * e[:-1]))


def test_difference_examples():
    assert difference([1, 3, 6, 10], 1).tolist() == [2, 3, 4]
    t = np.arange(20.0)
    assert np.all(difference(t ** 2, 2) == 2)
    x = np.array([4.0, 1.0])
    assert np.array_equal(difference(x, 0), x)
    with pytest.raises(ForecastError):
        difference([1.0, 2.0], 2)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-1000, 1000), min_size=4, max_size=40), st.integers(0, 3))
def test_integrate_round_trip(vals, d):
    x = np.array(vals, dtype=float)
    assert np.array_equal(integrate(difference(x, d), d, x[:d]), x)


def test_adf_matches_statsmodels():
    from statsmodels.tsa.stattools import adfuller

    rng = np.random.default_rng(7)
    for x in (np.cumsum(rng.standard_normal(600)), rng.standard_normal(600)):
        ours = adf_test(x, 4)
        sm = adfuller(x, maxlag=4, autolag=None, regression="c")
        assert ours.statistic == pytest.approx(sm[0], rel=1e-9)
        assert ours.critical_5pct == pytest.approx(sm[4]["5%"], rel=1e-9)


def test_adf_examples():
    rng = np.random.default_rng(11)
    assert not adf_test(np.cumsum(rng.standard_normal(2000))).reject_unit_root
    assert adf_test(rng.standard_normal(2000)).reject_unit_root
    flat = adf_test(np.full(100, 3.0), 2)
    assert flat.degenerate and math.isnan(flat.statistic) and not flat.reject_unit_root
    assert adf_critical_5pct(10 ** 9) == pytest.approx(-2.86154, abs=1e-6)


def test_acf_white_noise():
    x = np.random.default_rng(2).standard_normal(5000)
    r = acf(x, 40)
    assert r[0] == 1.0
    assert np.mean(np.abs(r[1:]) < 2 / math.sqrt(5000)) >= 0.9


def test_ar1_acf_pacf():
    rng = np.random.default_rng(3)
    e = rng.standard_normal(20000)
    x = np.zeros_like(e)
    for t in range(1, len(e)):
        x[t] = 0.8 * x[t - 1] + e[t]
    r = acf(x, 5)
    assert np.allclose(r[1:], 0.8 ** np.arange(1, 6), atol=0.05)
    p = pacf(x, 5)
    assert p[1] == pytest.approx(0.8, abs=0.05)
    assert np.all(np.abs(p[2:]) < 0.05)


def test_pacf_matches_statsmodels():
    from statsmodels.tsa.stattools import pacf as sm_pacf

    x = np.random.default_rng(4).standard_normal(800).cumsum()[:400]
    assert np.allclose(pacf(x, 10), sm_pacf(x, nlags=10, method="ldb"), atol=1e-10)


def test_zero_variance_acf():
    with pytest.raises(ForecastError):
        acf(np.ones(10), 2)


def test_fit_ma1_recovery():
    e = np.random.default_rng(8).standard_normal(5001)
    m = fit(e[1:] - 0.6 * e[:-1], 0, 0, 1)
    assert m.theta[0] == pytest.approx(0.6, abs=0.05)


def test_fit_ar1_recovery():
    rng = np.random.default_rng(9)
    e = rng.standard_normal(5000)
    x = np.zeros_like(e)
    for t in range(1, len(e)):
        x[t] = 0.7 * x[t - 1] + e[t]
    assert fit(x, 1, 0, 0).phi[0] == pytest.approx(0.7, abs=0.05)


def test_random_walk_model_residuals():
    x = np.random.default_rng(1).standard_normal(50).cumsum()
    m = fit(x, 0, 1, 0, include_mean=False)
    assert m.phi.size == 0 and m.theta.size == 0
    assert np.array_equal(residuals(m, x), np.diff(x))


def test_trivial_forecasts():
    x = np.array([1.0, 4.0, 2.0, 7.0, 5.0])
    rw = fit(x, 0, 1, 0, include_mean=False)
    assert np.all(forecast(rw, x, 6) == 5.0)
    lin = fit(x, 0, 2, 0, include_mean=False)
    assert np.allclose(forecast(lin, x, 3), [3.0, 1.0, -1.0])


def test_quadratic_exact_with_drift():
    t = np.arange(100.0)
    x = 0.5 * t ** 2 - 3 * t + 2
    m = fit(x[:80], 0, 2, 0)
    assert np.max(np.abs(forecast(m, x[:80], 20) - x[80:])) <= 1e-9


def levels_reference(m, x, steps):
    """Independent forecast: expand (1-B)^d * Phi(B) into one levels AR
    polynomial and recurse on levels with shocks from the levels form."""
    ar = np.array([1.0])
    for _ in range(m.d):
        ar = np.convolve(ar, [1.0, -1.0])
    ar = np.convolve(ar, np.concatenate([[1.0], -m.phi]))
    ma = np.concatenate([[1.0], -m.theta])
    k = len(ar) - 1
    const = m.mean * (1 - m.phi.sum())
    y = list(x)
    e = [0.0] * len(x)
    for t in range(k, len(x)):
        pred = -sum(ar[i] * y[t - i] for i in range(1, k + 1)) + const
        pred += sum(ma[j] * e[t - j] for j in range(1, len(ma)) if t - j >= k)
        e[t] = y[t] - pred
    for _ in range(steps):
        t = len(y)
        pred = -sum(ar[i] * y[t - i] for i in range(1, k + 1)) + const
        pred += sum(ma[j] * e[t - j] for j in range(1, len(ma)) if t - j < len(x) and t - j >= k)
        y.append(pred)
        e.append(0.0)
    return np.array(y[len(x):])


def test_ima21_forecast_against_reference():
    x = ima21(1500, seed=12)
    m = fit(x, 0, 2, 1)
    ours = forecast(m, x, 168)
    ref = levels_reference(m, x, 168)
    assert np.max(np.abs(ours - ref)) <= 1e-6 * max(1.0, np.max(np.abs(ref)))


def test_arma_forecast_against_reference():
    rng = np.random.default_rng(13)
    e = rng.standard_normal(3001)
    w = np.zeros(3000)
    for t in range(2, 3000):
        w[t] = 0.5 * w[t - 1] - 0.2 * w[t - 2] + e[t + 1] - 0.3 * e[t]
    x = np.cumsum(w) + 10
    m = fit(x, 2, 1, 1)
    assert np.allclose(forecast(m, x, 50), levels_reference(m, x, 50), atol=1e-8)


def test_forecast_continuity():
    x = ima21(400, seed=14)
    m = fit(x, 1, 2, 1)
    assert forecast(m, x[:-1], 1)[0] == pytest.approx(fitted(m, x)[-1], abs=1e-9)
    assert np.allclose(rolling_forecast(m, x[:300], x[300:]), fitted(m, x)[300:])


def test_fit_beats_null():
    x = ima21(1000, seed=15)
    assert fit(x, 1, 2, 1).css <= fit(x, 0, 2, 0).css


def test_stationarity_enforced():
    x = np.cumsum(np.random.default_rng(16).standard_normal(500))
    m = fit(x, 2, 0, 2)
    for coeffs in (m.phi, m.theta):
        roots = np.roots(np.concatenate([-coeffs[::-1], [1.0]]))
        assert np.all(np.abs(roots) > 1.0)


def test_select_order_ima21():
    x = ima21(5832, seed=1)
    sel = select_order(x)
    assert sel.order == (0, 2, 1)


def test_select_order_white_noise():
    assert select_order(np.random.default_rng(21).standard_normal(3000)).order == (0, 0, 0)


def test_score_examples():
    x = np.array([1.0, 3.0, 2.0, 5.0])
    s = score(x, x)
    assert (s.rmse, s.r2, s.mae) == (0.0, 1.0, 0.0)
    s = score(x + 1, x)
    assert s.rmse == pytest.approx(1.0) and s.mae == pytest.approx(1.0)
    flat = score(np.array([1.0, 2.0]), np.array([3.0, 3.0]))
    assert not flat.r2_defined and math.isnan(flat.r2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=50), st.integers(0, 1000))
def test_rmse_at_least_mae(vals, seed):
    a = np.array(vals)
    p = a + np.random.default_rng(seed).standard_normal(len(a))
    s = score(p, a)
    assert s.rmse >= s.mae - 1e-12
    assert s.r2 <= 1.0 or not s.r2_defined


def test_jarque_bera_against_scipy():
    rng = np.random.default_rng(17)
    for e in (rng.standard_normal(5000), rng.standard_t(2, 5000)):
        ours = jarque_bera(e)
        ref = stats.jarque_bera(e)
        assert ours.jb == pytest.approx(ref.statistic, rel=1e-10)
        assert ours.pvalue == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-300)


def test_normality_examples():
    rng = np.random.default_rng(18)
    assert jarque_bera(rng.standard_normal(5000)).gaussian
    assert not jarque_bera(rng.standard_t(2, 5000)).gaussian
    assert jarque_bera(np.zeros(20)).degenerate
    with pytest.raises(ForecastError):
        jarque_bera(np.ones(5))


def test_residual_normality_of_fitted_model():
    x = ima21(3000, seed=19)
    assert residual_normality(fit(x, 0, 2, 1), x).gaussian
