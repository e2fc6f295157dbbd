"""Day 1 with EVCIs on the oracle placement: hourly load flow, charging
energy, period labels and the per-EVCI ledger."""
import numpy as np

from evciplan.evsim import SimConfig, classify_periods, run_timeseries, simulate_evci
from evciplan.network import Placement, diurnal_scaling, ieee33
from evciplan.pricing import Tariff, evci_prices, settle_day, synthetic_grid_price

net = ieee33()
pl = Placement((2, 3, 19, 20, 21))

## Charging sessions
profiles = simulate_evci(SimConfig(seed=0), pl.n_evci)
print("EVs per EVCI:", [p.n_sessions for p in profiles])
print("energy per EVCI (kWh):", [round(p.energy_kwh.sum()) for p in profiles])

## Hourly load flow with the scaled base load
rep = run_timeseries(net, pl, profiles, diurnal_scaling(24, seed=0))
total = rep.evci_kwh.sum(axis=1)
periods = classify_periods(total)
print("\nhour  minV    loss kW  EVCI kWh  period")
for h in range(24):
    print(f"{h:4d}  {rep.min_voltage[h]:.4f}  {rep.loss_kw[h]:7.1f}  {total[h]:8.1f}  {periods[h]}")

## Prices and ledger
grid = synthetic_grid_price(24, seed=0)
sell = evci_prices(Tariff(), periods)
print(f"\ngrid {grid.hourly.min() * 100:.1f}-{grid.hourly.max() * 100:.1f} c/kWh, "
      f"EVCI {sell.min() * 100:.0f}-{sell.max() * 100:.0f} c/kWh, "
      f"hours selling below the grid: {int(np.sum(sell < grid.hourly))}")
for p in profiles:
    led = settle_day(p, periods, Tariff(), grid)
    print(f"EVCI {led.evci_id}: revenue ${led.revenue:.2f}  grid ${led.grid_cost:.2f}  "
          f"profit ${led.profit:.2f}  EVs (p/n/op) {led.ev_counts}")
