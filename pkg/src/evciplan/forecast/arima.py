"""ARIMA(p, d, q) by conditional sum of squares.

Sign convention (Box-Jenkins)::

    (1 - phi_1 B - ... - phi_p B^p) (1 - B)^d x_t = mu' + (1 - theta_1 B - ... - theta_q B^q) e_t

so an MA(1) with ``theta = 0.5`` is ``w_t = e_t - 0.5 e_{t-1}``. Note that
statsmodels writes the MA side with a plus sign.

Residuals start after the first ``p`` differenced values, with pre-sample
shocks set to zero. By default the sample mean of the differenced series
is removed first and added back when forecasting; for ``d >= 1`` that mean
is a drift, which is what makes a noiseless polynomial of degree ``d``
forecast exactly. ``include_mean=False`` gives the driftless model.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .diagnostics import (
    ForecastError,
    NormalityResult,
    _as_series,
    acf,
    adf_test,
    bartlett_band,
    difference,
    jarque_bera,
    pacf_from_acf,
)

# partial autocorrelations are squeezed into (-1/1.001, 1/1.001)
_PAC_BOUND = 1.0 / 1.001


@dataclass(frozen=True)
class ArimaModel:
    p: int
    d: int
    q: int
    phi: np.ndarray
    theta: np.ndarray
    sigma2: float
    mean: float = 0.0
    mean_adjusted: bool = False
    css: float = 0.0

    @property
    def order(self) -> tuple[int, int, int]:
        return self.p, self.d, self.q

    def to_dict(self) -> dict:
        return {
            "order": list(self.order),
            "phi": [float(v) for v in self.phi],
            "theta": [float(v) for v in self.theta],
            "sigma2": self.sigma2,
            "mean": self.mean,
            "mean_adjusted": self.mean_adjusted,
            "css": self.css,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "ArimaModel":
        p, dd, q = d["order"]
        return cls(p, dd, q, np.array(d["phi"], float), np.array(d["theta"], float),
                   float(d["sigma2"]), float(d.get("mean", 0.0)), bool(d.get("mean_adjusted", False)),
                   float(d.get("css", 0.0)))


def pacs_to_coeffs(pacs: np.ndarray) -> np.ndarray:
    """Map partial autocorrelations in (-1, 1) to the coefficients of a
    polynomial ``1 - a_1 z - ... - a_k z^k`` with all roots outside the
    unit circle (Durbin-Levinson step-up)."""
    a = np.zeros(0)
    for k, r in enumerate(pacs):
        a = np.concatenate([a - r * a[::-1], [r]])
    return a


def _unpack(z: np.ndarray, p: int, q: int):
    r = _PAC_BOUND * np.tanh(z)
    return pacs_to_coeffs(r[:p]), pacs_to_coeffs(r[p:p + q])


def css_residuals(w: np.ndarray, phi: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Residuals ``e_t`` for ``t >= p`` of an ARMA on the (demeaned) ``w``."""
    p = len(phi)
    u = w[p:].copy()
    for i, f in enumerate(phi, start=1):
        u -= f * w[p - i:len(w) - i]
    if len(theta) == 0:
        return u
    return lfilter([1.0], np.concatenate([[1.0], -np.asarray(theta)]), u)


def _working_series(x: np.ndarray, d: int, mean: float) -> np.ndarray:
    return difference(x, d) - mean


def fit(x, p: int, d: int, q: int, include_mean: bool = True) -> ArimaModel:
    """Minimise the conditional sum of squares with Nelder-Mead from zero.

    Stationarity and invertibility are built in: the optimiser works on
    unbounded values mapped through tanh to partial autocorrelations.
    """
    x = _as_series(x)
    if min(p, d, q) < 0:
        raise ForecastError("orders must be non-negative")
    if len(x) <= p + d + q + 2:
        raise ForecastError(f"series of length {len(x)} too short for ARIMA{(p, d, q)}")
    w0 = difference(x, d)
    mean_adj = bool(include_mean)
    mean = float(w0.mean()) if mean_adj else 0.0
    w = w0 - mean

    def css(z):
        phi, theta = _unpack(z, p, q)
        e = css_residuals(w, phi, theta)
        return float(e @ e)

    k = p + q
    if k:
        res = minimize(css, np.zeros(k), method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000 * k,
                                "maxfev": 8000 * k})
        z = res.x
    else:
        z = np.zeros(0)
    val = css(z)
    if not math.isfinite(val):
        raise ForecastError("non-finite sum of squares")
    phi, theta = _unpack(z, p, q)
    n_eff = len(w) - p
    return ArimaModel(p, d, q, phi, theta, val / n_eff, mean, mean_adj, val)


def residuals(m: ArimaModel, x) -> np.ndarray:
    x = _as_series(x)
    w = _working_series(x, m.d, m.mean)
    return css_residuals(w, m.phi, m.theta)


def fitted(m: ArimaModel, x) -> np.ndarray:
    """In-sample one-step predictions of ``x`` in levels.

    Entry ``t`` predicts ``x[t]`` from ``x[:t]``; the first ``p + d``
    entries have no prediction and are nan.
    """
    x = _as_series(x)
    e = residuals(m, x)
    out = np.full(len(x), np.nan)
    out[m.p + m.d:] = x[m.p + m.d:] - e
    return out


def forecast(m: ArimaModel, history, steps: int) -> np.ndarray:
    """Iterated multi-step forecast with future shocks set to zero,
    integrated back to levels."""
    x = _as_series(history)
    if len(x) < m.p + m.d + m.q or len(x) <= m.d:
        raise ForecastError("history too short for the model order")
    if steps < 0:
        raise ForecastError("steps must be non-negative")
    w = _working_series(x, m.d, m.mean)
    e = css_residuals(w, m.phi, m.theta)
    # pad with zero shocks for the conditioning values
    e = np.concatenate([np.zeros(len(w) - len(e)), e])
    wf = list(w)
    ef = list(e)
    for _ in range(steps):
        v = 0.0
        for i, f in enumerate(m.phi, start=1):
            v += f * wf[-i]
        for j, t in enumerate(m.theta, start=1):
            v -= t * ef[-j]
        wf.append(v)
        ef.append(0.0)
    future = np.array(wf[len(w):]) + m.mean
    # integrate: add back each differencing level from the last observed values
    for k in reversed(range(m.d)):
        last = np.diff(x, n=k)[-1]
        future = last + np.cumsum(future)
    return future


def rolling_forecast(m: ArimaModel, history, actual) -> np.ndarray:
    """One-step-ahead predictions over ``actual``, each made with the true
    values seen so far and fixed parameters."""
    h = _as_series(history)
    a = _as_series(actual)
    both = np.concatenate([h, a])
    return fitted(m, both)[len(h):]


@dataclass(frozen=True)
class OrderSelection:
    order: tuple[int, int, int]
    d_adf: list
    p0: int
    q0: int
    candidates: dict


def _last_outside(vals: np.ndarray, band: float) -> int:
    out = np.flatnonzero(np.abs(vals[1:]) > band)
    return int(out[-1] + 1) if out.size else 0


def select_order(x, max_p: int = 3, max_d: int = 2, max_q: int = 3,
                 adf_lag: int | None = None, include_mean: bool = True) -> OrderSelection:
    """Pick (p, d, q).

    ``d`` is the smallest difference order whose series rejects a unit
    root. Initial ``p`` and ``q`` are the last PACF and ACF lags (up to
    ``max_p``/``max_q``) outside the Bartlett band. The final pair is the
    BIC minimiser over ``0..p0+1`` by ``0..q0+1`` (capped at the maxima),
    first on ties in (p + q, p) order.
    """
    x = _as_series(x)
    d_sel = None
    tests = []
    for d in range(max_d + 1):
        w = difference(x, d)
        t = adf_test(w, adf_lag)
        tests.append({"d": d, "statistic": t.statistic, "critical_5pct": t.critical_5pct,
                      "degenerate": t.degenerate})
        # a series with nothing left to explain counts as stationary
        if t.reject_unit_root or t.degenerate:
            d_sel = d
            break
    if d_sel is None:
        raise ForecastError(f"no differencing order up to {max_d} gives a stationary series")
    w = difference(x, d_sel)
    if np.ptp(w) == 0:
        return OrderSelection((0, d_sel, 0), tests, 0, 0, {})
    band = bartlett_band(len(w))
    r = acf(w, max(max_p, max_q))
    p0 = _last_outside(pacf_from_acf(r)[:max_p + 1], band)
    q0 = _last_outside(r[:max_q + 1], band)
    cands = {}
    for p in range(min(p0 + 1, max_p) + 1):
        for q in range(min(q0 + 1, max_q) + 1):
            m = fit(x, p, d_sel, q, include_mean)
            n = len(w) - p
            bic = n * math.log(max(m.sigma2, 1e-300)) + (p + q + int(m.mean_adjusted)) * math.log(n)
            cands[(p, d_sel, q)] = bic
    best = min(sorted(cands, key=lambda o: (o[0] + o[2], o[0])), key=lambda o: cands[o])
    return OrderSelection(best, tests, p0, q0, {f"{k}": v for k, v in cands.items()})


def residual_normality(m: ArimaModel, x) -> NormalityResult:
    return jarque_bera(residuals(m, x))
