import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evciplan.evsim import NORMAL, OFFPEAK, PEAK, SimConfig, classify_periods, simulate_evci
from evciplan.pricing import (
    GridPriceSeries,
    Tariff,
    evci_price,
    load_grid_price,
    save_grid_price,
    settle,
    settle_day,
    synthetic_grid_price,
)


def test_evci_price_examples():
    t = Tariff()
    assert evci_price(t, PEAK) == pytest.approx(0.10)
    assert evci_price(t, OFFPEAK) == pytest.approx(0.04)
    bare = Tariff(r_f=0.0)
    assert evci_price(bare, NORMAL) == bare.r_n
    with pytest.raises(ValueError):
        evci_price(t, "midday")


def test_tariff_ordering():
    with pytest.raises(ValueError):
        Tariff(r_p=0.01, r_n=0.05)


def test_flat_day_profit():
    led = settle(np.full(24, 100.0), [NORMAL] * 24, Tariff(r_f=0.0, r_n=0.05, r_op=0.0),
                 np.full(24, 0.03))
    assert led.profit == pytest.approx(48.0, abs=1e-9)
    assert round(led.profit, 2) == 48.00
    assert led.profit == led.revenue - led.grid_cost


def test_zero_load_ledger():
    led = settle(np.zeros(24), [PEAK] * 24, Tariff(), np.full(24, 0.05))
    assert (led.revenue, led.grid_cost, led.profit, led.ev_counts) == (0.0, 0.0, 0.0, (0, 0, 0))


def test_length_mismatch():
    with pytest.raises(ValueError):
        settle(np.ones(24), [PEAK] * 23, Tariff(), np.ones(24))


loads = st.lists(st.floats(0, 500), min_size=24, max_size=24)


@settings(max_examples=100, deadline=None)
@given(loads, st.integers(0, 10_000))
def test_linearity_and_sell_above_buy(kwh, seed):
    rng = np.random.default_rng(seed)
    periods = classify_periods(rng.uniform(0, 1, 24))
    t = Tariff()
    sell = np.array([evci_price(t, p) for p in periods])
    grid = sell * rng.uniform(0.0, 1.0, 24)
    a = settle(np.array(kwh), periods, t, grid)
    b = settle(2 * np.array(kwh), periods, t, grid)
    assert a.profit >= 0
    assert b.revenue == pytest.approx(2 * a.revenue)
    assert b.profit == pytest.approx(2 * a.profit, abs=1e-9)


def test_ledger_additivity():
    prof = simulate_evci(SimConfig(seed=3), 3)
    periods = classify_periods(sum(p.hourly_kw for p in prof))
    grid = synthetic_grid_price(24, 3)
    parts = [settle_day(p, periods, Tariff(), grid) for p in prof]
    merged = settle(sum(p.hourly_kw for p in prof), periods, Tariff(), grid.hourly)
    assert sum(l.profit for l in parts) == pytest.approx(merged.profit)


def test_ev_counts_cover_sessions():
    prof = simulate_evci(SimConfig(seed=3, horizon_days=2), 1)[0]
    periods = classify_periods(prof.hourly_kw)
    grid = synthetic_grid_price(48, 0)
    days = [settle_day(prof, periods, Tariff(), grid, d) for d in range(2)]
    assert sum(l.n_total for l in days) == prof.n_sessions


def test_synthetic_grid_range():
    g = synthetic_grid_price(24 * 50, seed=9)
    assert g.hourly.min() >= 0.02 and g.hourly.max() <= 0.08
    day = g.hourly.reshape(50, 24).mean(axis=0)
    assert day.argmax() in (17, 18, 19, 20)
    assert day.argmin() in (0, 1, 2, 3, 4, 23)


def test_grid_csv_round_trip(tmp_path):
    g = synthetic_grid_price(24, 1)
    save_grid_price(tmp_path / "g.csv", g)
    assert np.array_equal(load_grid_price(tmp_path / "g.csv").hourly, g.hourly)


def test_negative_grid_price_rejected():
    with pytest.raises(ValueError):
        GridPriceSeries(np.array([0.01, -0.01]))
