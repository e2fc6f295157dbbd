"""Unit-root test, autocorrelations, residual normality and forecast scores."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


class ForecastError(ValueError):
    pass


def _as_series(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size == 0:
        raise ForecastError("series must be a non-empty vector")
    if not np.all(np.isfinite(x)):
        raise ForecastError("series contains non-finite values")
    return x


def difference(x, d: int) -> np.ndarray:
    x = _as_series(x)
    if d < 0:
        raise ForecastError("d must be non-negative")
    if len(x) <= d:
        raise ForecastError(f"series of length {len(x)} is too short to difference {d} times")
    return np.diff(x, n=d) if d else x.copy()


def integrate(dx, d: int, initial) -> np.ndarray:
    """Undo :func:`difference`. ``initial`` are the first ``d`` values of
    the original series."""
    initial = np.asarray(initial, dtype=float)
    if len(initial) != d:
        raise ForecastError(f"need {d} initial values")
    y = np.asarray(dx, dtype=float)
    heads = [np.diff(initial, n=k)[0] for k in range(d)]
    for k in reversed(range(d)):
        y = np.concatenate([[heads[k]], heads[k] + np.cumsum(y)])
    return y


# MacKinnon (2010) response surface, constant-only regression, 5% level.
_ADF_C5 = (-2.86154, -2.8903, -4.234, -40.040)


def adf_critical_5pct(nobs: int) -> float:
    b0, b1, b2, b3 = _ADF_C5
    return b0 + b1 / nobs + b2 / nobs ** 2 + b3 / nobs ** 3


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    critical_5pct: float
    lags: int
    nobs: int
    degenerate: bool = False

    @property
    def reject_unit_root(self) -> bool:
        return (not self.degenerate) and self.statistic < self.critical_5pct


def default_adf_lags(n: int) -> int:
    return int(math.ceil(12.0 * (n / 100.0) ** 0.25))


def adf_test(x, max_lag: int | None = None) -> AdfResult:
    """Augmented Dickey-Fuller test with a constant and ``max_lag`` lagged
    differences.

    The statistic is the t-ratio on ``x[t-1]`` in
    ``dx[t] = a + g*x[t-1] + sum_i b_i*dx[t-i]``. A constant series has no
    defined statistic and comes back with ``degenerate=True``.
    """
    x = _as_series(x)
    if max_lag is None:
        max_lag = min(default_adf_lags(len(x)), len(x) // 2 - 2)
    if max_lag < 0 or len(x) <= max_lag + 2:
        raise ForecastError("series too short for the requested lag order")
    dx = np.diff(x)
    nobs = len(dx) - max_lag
    crit = adf_critical_5pct(nobs)
    if np.ptp(x) == 0:
        return AdfResult(math.nan, crit, max_lag, nobs, degenerate=True)
    y = dx[max_lag:]
    cols = [np.ones(nobs), x[max_lag:-1]]
    cols += [dx[max_lag - i:len(dx) - i] for i in range(1, max_lag + 1)]
    X = np.column_stack(cols)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ beta
    dof = nobs - X.shape[1]
    s2 = float(resid @ resid) / dof
    if s2 == 0:
        return AdfResult(math.nan, crit, max_lag, nobs, degenerate=True)
    cov = s2 * np.linalg.inv(X.T @ X)
    return AdfResult(float(beta[1] / math.sqrt(cov[1, 1])), crit, max_lag, nobs)


def acf(x, max_lag: int) -> np.ndarray:
    """Sample autocorrelations for lags ``0..max_lag`` (biased estimator)."""
    x = _as_series(x)
    if len(x) <= max_lag:
        raise ForecastError("series shorter than max_lag")
    z = x - x.mean()
    c0 = float(z @ z)
    if c0 == 0:
        raise ForecastError("zero-variance series")
    n = len(z)
    return np.array([1.0] + [float(z[:n - k] @ z[k:]) / c0 for k in range(1, max_lag + 1)])


def pacf_from_acf(r: np.ndarray) -> np.ndarray:
    """Durbin-Levinson recursion; ``r[0]`` must be 1."""
    max_lag = len(r) - 1
    out = np.zeros(max_lag + 1)
    out[0] = 1.0
    phi = np.zeros(0)
    v = 1.0
    for k in range(1, max_lag + 1):
        a = (r[k] - phi @ r[k - 1:0:-1]) / v if k > 1 else r[1]
        phi = np.concatenate([phi - a * phi[::-1], [a]])
        v *= 1.0 - a * a
        out[k] = a
        if v <= 0:
            break
    return out


def pacf(x, max_lag: int) -> np.ndarray:
    return pacf_from_acf(acf(x, max_lag))


def bartlett_band(n: int) -> float:
    return 1.96 / math.sqrt(n)


@dataclass(frozen=True)
class NormalityResult:
    jb: float
    pvalue: float
    n: int
    degenerate: bool = False

    @property
    def gaussian(self) -> bool:
        return (not self.degenerate) and self.pvalue > 0.05


def jarque_bera(resid) -> NormalityResult:
    e = np.asarray(resid, dtype=float)
    if e.size < 8:
        raise ForecastError("need at least 8 residuals")
    z = e - e.mean()
    m2 = float(np.mean(z ** 2))
    if m2 == 0:
        return NormalityResult(math.nan, math.nan, e.size, degenerate=True)
    skew = float(np.mean(z ** 3)) / m2 ** 1.5
    kurt = float(np.mean(z ** 4)) / m2 ** 2
    jb = e.size / 6.0 * (skew ** 2 + (kurt - 3.0) ** 2 / 4.0)
    return NormalityResult(jb, float(stats.chi2.sf(jb, 2)), e.size)


@dataclass(frozen=True)
class ForecastScores:
    rmse: float
    r2: float
    mae: float
    r2_defined: bool = True

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "r2": self.r2 if self.r2_defined else None,
                "mae": self.mae, "r2_defined": self.r2_defined}


def score(pred, actual) -> ForecastScores:
    """RMSE, R^2 = 1 - SS_res/SS_tot and MAE. A constant ``actual`` leaves
    R^2 undefined (nan, flagged)."""
    p = np.asarray(pred, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape or p.ndim != 1:
        raise ForecastError("pred and actual must be vectors of equal length")
    if len(a) < 2:
        raise ForecastError("need at least two points")
    err = p - a
    rmse = math.sqrt(float(np.mean(err ** 2)))
    mae = float(np.mean(np.abs(err)))
    ss_tot = float(np.sum((a - a.mean()) ** 2))
    if ss_tot == 0:
        return ForecastScores(rmse, math.nan, mae, r2_defined=False)
    return ForecastScores(rmse, 1.0 - float(np.sum(err ** 2)) / ss_tot, mae)
