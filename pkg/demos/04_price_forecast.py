"""ARIMA on the hourly EVCI price: 5664 training hours, 168 test hours.

The simulated price switches between three levels according to how busy
the EVCIs are in each hour relative to the rest of that day. With random
arrivals those labels are close to independent from hour to hour, so
there is little for a linear model to learn. A synthetic IMA(2,1) series
shows the same code on data with real structure.
"""
import numpy as np

from evciplan.evsim import SimConfig, classify_periods, simulate_evci
from evciplan.forecast import acf, fit, forecast, rolling_forecast, score, select_order
from evciplan.pricing import Tariff, evci_prices

profiles = simulate_evci(SimConfig(horizon_days=243, seed=0), 5)
price = evci_prices(Tariff(), classify_periods(sum(p.hourly_kw for p in profiles)))
print(f"{len(price)} hourly prices, lag-1..3 autocorrelation {np.round(acf(price, 3)[1:], 3)}")

train, test = price[:5664], price[5664:]
sel = select_order(train)
m = fit(train, *sel.order)
print(f"selected ARIMA{sel.order}  (PACF cut {sel.p0}, ACF cut {sel.q0})")
for name, pred in (("168-step", forecast(m, train, 168)), ("rolling 1-step", rolling_forecast(m, train, test))):
    s = score(pred, test)
    print(f"  {name:15s} RMSE {s.rmse:.6f}  R2 {s.r2:.6f}  MAE {s.mae:.6f}")

## Same pipeline on an IMA(2,1) series
e = np.random.default_rng(1).standard_normal(5833)
x = np.cumsum(np.cumsum(e[1:] - 0.5 * e[:-1]))
sel = select_order(x[:5664])
m = fit(x[:5664], *sel.order)
s = score(rolling_forecast(m, x[:5664], x[5664:]), x[5664:])
print(f"\nIMA(2,1): selected ARIMA{sel.order}, theta {m.theta.round(4).tolist()}, "
      f"rolling R2 {s.r2:.6f}")
