"""EVCI selling price, grid purchase cost and daily profit settlement.

Prices are in $/kWh throughout; money in $.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass

import numpy as np

from .evsim import NORMAL, OFFPEAK, PEAK, EvciLoadProfile


@dataclass(frozen=True)
class Tariff:
    r_f: float = 0.02       # fixed part
    r_p: float = 0.08       # peak
    r_n: float = 0.05       # normal
    r_op: float = 0.02      # off-peak

    def __post_init__(self):
        if not self.r_p >= self.r_n >= self.r_op >= 0:
            raise ValueError("need r_p >= r_n >= r_op >= 0")
        if self.r_f < 0:
            raise ValueError("r_f must be non-negative")

    def period_price(self, period: str) -> float:
        try:
            return {PEAK: self.r_p, NORMAL: self.r_n, OFFPEAK: self.r_op}[period]
        except KeyError:
            raise ValueError(f"unknown period {period!r}") from None


def evci_price(tariff: Tariff, period: str) -> float:
    """Selling price for one hour: fixed part plus the period's price."""
    return tariff.r_f + tariff.period_price(period)


def evci_prices(tariff: Tariff, periods) -> np.ndarray:
    return np.array([evci_price(tariff, p) for p in periods], dtype=float)


@dataclass(frozen=True)
class GridPriceSeries:
    hourly: np.ndarray

    def __post_init__(self):
        h = np.asarray(self.hourly, dtype=float)
        if h.ndim != 1 or h.size == 0:
            raise ValueError("grid prices must be a non-empty vector")
        if not np.all(np.isfinite(h)) or np.any(h < 0):
            raise ValueError("grid prices must be finite and non-negative")
        object.__setattr__(self, "hourly", h)

    def __len__(self):
        return len(self.hourly)


def synthetic_grid_price(hours: int, seed: int = 0, lo: float = 0.02, hi: float = 0.08,
                         noise: float = 0.10) -> GridPriceSeries:
    """Diurnal real-time price between ``lo`` and ``hi``.

    Cheap at night, a shoulder in the morning and the maximum in the early
    evening, with multiplicative noise, then clipped to ``[lo, hi]``.
    """
    rng = np.random.default_rng(seed)
    h = np.arange(hours) % 24
    shape = 0.55 * np.exp(-0.5 * ((h - 9.0) / 2.5) ** 2) + np.exp(-0.5 * ((h - 18.5) / 2.5) ** 2)
    shape = shape / shape.max()
    price = lo + (hi - lo) * shape
    price = price * rng.uniform(1 - noise, 1 + noise, hours)
    return GridPriceSeries(np.clip(price, lo, hi))


def load_grid_price(path) -> GridPriceSeries:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or [c.strip() for c in rows[0]] != ["hour", "price"]:
        raise ValueError(f"{path}: expected header 'hour,price'")
    vals = []
    for i, r in enumerate(rows[1:], start=2):
        try:
            vals.append(float(r[1]))
        except (IndexError, ValueError):
            raise ValueError(f"{path}:{i}: bad price row {r!r}") from None
    return GridPriceSeries(np.array(vals))


def save_grid_price(path, grid: GridPriceSeries) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "price"])
        for h, v in enumerate(grid.hourly):
            w.writerow([h, repr(float(v))])


@dataclass(frozen=True)
class DailyLedger:
    evci_id: int
    day: int
    energy_kwh: float
    revenue: float
    grid_cost: float
    profit: float
    ev_counts: tuple[int, int, int]     # (peak, normal, offpeak) by session start hour

    @property
    def n_total(self) -> int:
        return sum(self.ev_counts)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ev_counts"] = dict(zip((PEAK, NORMAL, OFFPEAK), self.ev_counts))
        return d


def settle(hourly_kwh, periods, tariff: Tariff, grid, evci_id: int = 0, day: int = 0,
           start_hours=None) -> DailyLedger:
    """Settle one block of hours (normally a day) for one EVCI.

    ``start_hours`` are session start times in hours relative to the block
    and only feed the EV counts.
    """
    e = np.asarray(hourly_kwh, dtype=float)
    g = np.asarray(grid, dtype=float)
    periods = list(periods)
    if not len(e) == len(periods) == len(g):
        raise ValueError(f"length mismatch: {len(e)} hours, {len(periods)} periods, {len(g)} prices")
    sell = evci_prices(tariff, periods)
    revenue = float(np.dot(e, sell))
    cost = float(np.dot(e, g))
    counts = [0, 0, 0]
    if start_hours is not None:
        idx = {PEAK: 0, NORMAL: 1, OFFPEAK: 2}
        for t in np.asarray(start_hours, dtype=float):
            counts[idx[periods[int(t) % len(periods)]]] += 1
    return DailyLedger(evci_id, day, float(e.sum()), revenue, cost, revenue - cost, tuple(counts))


def settle_day(profile: EvciLoadProfile, periods, tariff: Tariff, grid: GridPriceSeries,
               day: int = 0) -> DailyLedger:
    """Ledger of ``profile`` for day ``day``; ``periods`` and ``grid`` span
    the whole horizon. Sessions count on the day their charging starts."""
    H = profile.hours
    if len(periods) != H or len(grid) != H:
        raise ValueError(f"length mismatch: profile {H} h, periods {len(periods)}, grid {len(grid)}")
    if not 0 <= day < H // 24:
        raise ValueError(f"day {day} outside the horizon")
    sl = slice(24 * day, 24 * day + 24)
    start = np.mod(profile.start_h, H)
    on_day = (start >= 24 * day) & (start < 24 * day + 24)
    return settle(profile.hourly_kw[sl], list(periods)[sl], tariff, grid.hourly[sl],
                  profile.evci_id, day, start[on_day] - 24 * day)


def settle_all(profiles: list[EvciLoadProfile], periods, tariff: Tariff,
               grid: GridPriceSeries) -> list[DailyLedger]:
    days = profiles[0].hours // 24 if profiles else 0
    return [settle_day(p, periods, tariff, grid, d) for d in range(days) for p in profiles]


def write_price_csv(path, grid: GridPriceSeries, tariff: Tariff, periods) -> None:
    sell = evci_prices(tariff, periods)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "grid_price", "evci_price", "period"])
        for h, (g, s, p) in enumerate(zip(grid.hourly, sell, periods)):
            w.writerow([h, repr(float(g)), repr(float(s)), p])


def ledgers_json(ledgers: list[DailyLedger], tariff: Tariff) -> str:
    return json.dumps({"tariff": asdict(tariff), "ledgers": [l.to_dict() for l in ledgers]}, indent=2)
