"""EV arrival and fast-charging simulation at each EVCI, and the hourly
time-series load flow that consumes the resulting profiles.

Every station serves its EVs first-come first-served at a constant charger
rating until 80% state of charge. The horizon is treated as periodic: a
queue that runs past the last hour spills into the first hours of the
horizon (and holds the station there), so no energy is dropped at the end.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .loadflow import LoadFlowConfig, batch_objectives, solve_batch
from .network import FeederNetwork, Placement

TARGET_SOC = 0.8
SOC_RANGE = (0.2, 0.8)

PEAK, NORMAL, OFFPEAK = "peak", "normal", "offpeak"
PERIODS = (PEAK, NORMAL, OFFPEAK)


@dataclass(frozen=True)
class EvModel:
    name: str
    battery_kwh: float

    def __post_init__(self):
        if not self.battery_kwh > 0:
            raise ValueError("battery_kwh must be positive")


EV_MODELS = (
    EvModel("Nissan Leaf", 24.0),
    EvModel("Nissan e-NV200", 40.0),
    EvModel("Tesla Model 3 Standard Plus", 55.0),
    EvModel("Tesla Model 3 Long Range", 75.0),
    EvModel("BYD e6", 82.0),
)


@dataclass(frozen=True)
class EvSession:
    station_id: tuple[int, int]     # (evci index, station index)
    ev: EvModel
    arrival_h: float
    soc0: float
    start_h: float
    energy_kwh: float
    duration_h: float

    @property
    def finish_h(self) -> float:
        return self.start_h + self.duration_h


def session_energy(ev: EvModel, soc0: float) -> float:
    return (TARGET_SOC - soc0) * ev.battery_kwh


@dataclass(frozen=True)
class SimConfig:
    horizon_days: int = 1
    charger_kw: float = 50.0
    stations_per_evci: int = 20
    evs_min: int = 6
    evs_max: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.horizon_days < 1 or self.stations_per_evci < 1:
            raise ValueError("horizon_days and stations_per_evci must be positive")
        if not self.charger_kw > 0:
            raise ValueError("charger_kw must be positive")
        if not 0 <= self.evs_min <= self.evs_max:
            raise ValueError("need 0 <= evs_min <= evs_max")
        # worst case: every EV arrives empty with the largest battery
        worst = self.evs_max * max(m.battery_kwh for m in EV_MODELS) * 0.6 / self.charger_kw
        if worst >= 24.0:
            raise ValueError("a station cannot serve evs_max sessions in one day")

    @property
    def hours(self) -> int:
        return 24 * self.horizon_days

    @property
    def capacity_kw(self) -> float:
        return self.stations_per_evci * self.charger_kw


@dataclass
class EvciLoadProfile:
    """Hourly charging load of one EVCI plus its session table.

    Sessions are stored column-wise; ``sessions`` builds the record view.
    """

    evci_id: int
    hourly_kw: np.ndarray
    station: np.ndarray
    model: np.ndarray
    arrival_h: np.ndarray
    soc0: np.ndarray
    start_h: np.ndarray
    energy_kwh: np.ndarray
    duration_h: np.ndarray

    @property
    def n_sessions(self) -> int:
        return len(self.arrival_h)

    @property
    def hours(self) -> int:
        return len(self.hourly_kw)

    @property
    def sessions(self) -> list[EvSession]:
        return [
            EvSession((self.evci_id, int(s)), EV_MODELS[int(m)], float(a), float(c),
                      float(t), float(e), float(d))
            for s, m, a, c, t, e, d in zip(self.station, self.model, self.arrival_h, self.soc0,
                                           self.start_h, self.energy_kwh, self.duration_h)
        ]

    def daily_counts(self, n_stations: int) -> np.ndarray:
        """EV arrivals per (day, station)."""
        days = self.hours // 24
        day = np.floor(self.arrival_h / 24.0).astype(int)
        out = np.zeros((days, n_stations), dtype=int)
        np.add.at(out, (day, self.station), 1)
        return out


def fifo_schedule(arrival: np.ndarray, duration: np.ndarray, carry: float = 0.0) -> np.ndarray:
    """Start times for sessions on one station, arrivals sorted ascending.

    ``carry`` is the time the station becomes free. Each session starts at
    ``max(arrival, previous finish)``.
    """
    start = np.empty(len(arrival))
    free = carry
    for i, (a, d) in enumerate(zip(arrival.tolist(), duration.tolist())):
        s = a if a > free else free
        start[i] = s
        free = s + d
    return start


def _periodic_schedule(arrival, duration, horizon, max_iter=100):
    carry = 0.0
    for _ in range(max_iter):
        start = fifo_schedule(arrival, duration, carry)
        spill = max(0.0, float(start[-1] + duration[-1]) - horizon) if start.size else 0.0
        if spill == carry:
            return start
        carry = spill
    raise RuntimeError("periodic queue did not settle")


def prorate(start: np.ndarray, finish: np.ndarray, power_kw, hours: int) -> np.ndarray:
    """Hourly average kW of constant-power intervals, wrapped onto ``hours``.

    Each hour gets the power times its overlap with the interval, so the
    hourly sum equals the interval energy.
    """
    start = np.asarray(start, dtype=float)
    finish = np.asarray(finish, dtype=float)
    power = np.broadcast_to(np.asarray(power_kw, dtype=float), start.shape)
    if start.size == 0:
        return np.zeros(hours)
    ext = int(math.ceil(float(finish.max()))) + 1
    ext = max(ext, hours)
    full = np.zeros(ext + 1)
    part = np.zeros(ext + 1)
    for x, w in ((start, power), (finish, -power)):
        k = np.floor(x).astype(int)
        np.add.at(full, k + 1, w)
        np.add.at(part, k, w * (k + 1 - x))
    kw = np.cumsum(full)[:ext] + part[:ext]
    out = np.zeros(hours)
    np.add.at(out, np.arange(ext) % hours, kw)
    return out


def _simulate_one(evci_id: int, cfg: SimConfig, rng: np.random.Generator) -> EvciLoadProfile:
    H = cfg.hours
    n_st = cfg.stations_per_evci
    counts = rng.integers(cfg.evs_min, cfg.evs_max + 1, size=(cfg.horizon_days, n_st))
    total = int(counts.sum())
    day = np.repeat(np.repeat(np.arange(cfg.horizon_days), n_st), counts.ravel())
    station = np.repeat(np.tile(np.arange(n_st), cfg.horizon_days), counts.ravel())
    arrival = day * 24.0 + rng.uniform(0.0, 24.0, total)
    model = rng.integers(0, len(EV_MODELS), total)
    soc0 = rng.uniform(*SOC_RANGE, total)
    battery = np.array([m.battery_kwh for m in EV_MODELS])[model]
    energy = (TARGET_SOC - soc0) * battery
    duration = energy / cfg.charger_kw

    order = np.lexsort((arrival, station))
    station, arrival, model, soc0 = station[order], arrival[order], model[order], soc0[order]
    energy, duration = energy[order], duration[order]
    start = np.empty(total)
    bounds = np.searchsorted(station, np.arange(n_st + 1))
    for s in range(n_st):
        a, b = bounds[s], bounds[s + 1]
        start[a:b] = _periodic_schedule(arrival[a:b], duration[a:b], float(H))
    hourly = prorate(start, start + duration, cfg.charger_kw, H)
    return EvciLoadProfile(evci_id, hourly, station, model, arrival, soc0, start, energy, duration)


def simulate_evci(cfg: SimConfig, n_evci: int) -> list[EvciLoadProfile]:
    """Simulate ``n_evci`` independent EVCIs. Each gets its own child seed,
    so EVCI ``k`` is the same whatever ``n_evci`` is."""
    if n_evci < 0:
        raise ValueError("n_evci must be non-negative")
    seeds = np.random.SeedSequence(cfg.seed).spawn(n_evci)
    return [_simulate_one(k + 1, cfg, np.random.default_rng(ss)) for k, ss in enumerate(seeds)]


def classify_periods(hourly_kwh) -> np.ndarray:
    """Label each hour peak, normal or offpeak within its own day.

    Hours at or above the day's 67th percentile are peak, hours below the
    33rd percentile offpeak. A day whose values are all equal is normal.
    """
    x = np.asarray(hourly_kwh, dtype=float)
    if x.size == 0 or x.size % 24:
        raise ValueError("series must cover whole days")
    out = np.empty(x.size, dtype=object)
    for d in range(x.size // 24):
        day = x[24 * d: 24 * d + 24]
        lab = np.full(24, NORMAL, dtype=object)
        if day.max() > day.min():
            hi, lo = np.percentile(day, [67, 33])
            lab[day >= hi] = PEAK
            lab[day < lo] = OFFPEAK
        out[24 * d: 24 * d + 24] = lab
    return out


@dataclass
class TimeSeriesReport:
    vmag: np.ndarray                # (H, n_bus)
    loss_kw: np.ndarray             # (H,), inf where the hour failed
    sq_dev: np.ndarray
    converged: np.ndarray           # (H,) bool
    evci_kwh: np.ndarray            # (H, n_evci)
    load_kwh: np.ndarray            # feeder demand incl. EVCIs
    locations: tuple[int, ...]
    periods: np.ndarray = field(default=None)

    @property
    def hours(self) -> int:
        return len(self.loss_kw)

    @property
    def substation_kwh(self) -> np.ndarray:
        return self.load_kwh + self.loss_kw

    @property
    def min_voltage(self) -> np.ndarray:
        return self.vmag.min(axis=1)

    @property
    def min_voltage_bus(self) -> np.ndarray:
        return self.vmag.argmin(axis=1) + 1

    @property
    def failed_hours(self) -> list[int]:
        return [int(h) for h in np.flatnonzero(~self.converged)]

    def summary(self) -> dict:
        ok = self.converged
        return {
            "hours": self.hours,
            "locations": list(self.locations),
            "failed_hours": self.failed_hours,
            "min_voltage_pu": float(self.min_voltage[ok].min()) if ok.any() else None,
            "total_loss_kwh": float(self.loss_kw[ok].sum()),
            "evci_energy_kwh": [float(e) for e in self.evci_kwh.sum(axis=0)],
            "load_energy_kwh": float(self.load_kwh.sum()),
        }

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour", "min_voltage_pu", "min_voltage_bus", "loss_kw", "sq_dev",
                        "converged", "load_kwh", "substation_kwh", "evci_total_kwh", "period"])
            for h in range(self.hours):
                w.writerow([h, repr(float(self.min_voltage[h])), int(self.min_voltage_bus[h]),
                            repr(float(self.loss_kw[h])), repr(float(self.sq_dev[h])),
                            int(self.converged[h]), repr(float(self.load_kwh[h])),
                            repr(float(self.substation_kwh[h])),
                            repr(float(self.evci_kwh[h].sum())), self.periods[h]])

    def write_voltages(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["hour"] + [f"v_{b}" for b in range(1, self.vmag.shape[1] + 1)])
            for h, row in enumerate(self.vmag):
                w.writerow([h] + [repr(float(v)) for v in row])


def run_timeseries(net: FeederNetwork, pl: Placement, profiles: list[EvciLoadProfile],
                   base_scaling, lf: LoadFlowConfig = LoadFlowConfig()) -> TimeSeriesReport:
    """One load flow per hour with scaled base loads plus EVCI charging.

    Hours that fail to converge are flagged and get infinite objectives;
    the rest of the horizon is still solved.
    """
    scale = np.asarray(base_scaling, dtype=float)
    if len(profiles) != pl.n_evci:
        raise ValueError(f"{len(profiles)} profiles for {pl.n_evci} EVCI locations")
    pl.check(net)
    H = len(scale)
    if any(p.hours != H for p in profiles):
        raise ValueError("profile length differs from the scaling horizon")
    p = net.p_kw[:, None] * scale[None, :]
    q = net.q_kvar[:, None] * scale[None, :]
    evci = np.zeros((H, pl.n_evci))
    for k, (bus, prof) in enumerate(zip(pl.locations, profiles)):
        p[bus - 1] += prof.hourly_kw
        evci[:, k] = prof.hourly_kw
    batch = solve_batch(net, p, q, lf)
    obj = batch_objectives(batch, lf)
    ok = batch.converged & ~batch.collapsed
    return TimeSeriesReport(
        vmag=np.abs(batch.v).T,
        loss_kw=obj[:, 0],
        sq_dev=obj[:, 1],
        converged=ok,
        evci_kwh=evci,
        load_kwh=p.sum(axis=0),
        locations=pl.locations,
        periods=classify_periods(evci.sum(axis=1)) if H % 24 == 0 else None,
    )


def save_profiles(path, profiles: list[EvciLoadProfile]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour"] + [f"evci_{p.evci_id}_kw" for p in profiles])
        H = profiles[0].hours if profiles else 0
        for h in range(H):
            w.writerow([h] + [repr(float(p.hourly_kw[h])) for p in profiles])


def load_profiles(path) -> np.ndarray:
    """Hourly kW matrix ``(H, n_evci)`` from a profiles CSV."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0][0] != "hour":
        raise ValueError(f"{path}: expected a 'hour,evci_1_kw,...' header")
    data = np.array([[float(v) for v in r[1:]] for r in rows[1:]], dtype=float)
    return data.reshape(len(rows) - 1, len(rows[0]) - 1)


def save_sessions(path, profiles: list[EvciLoadProfile]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["evci", "station", "model", "arrival_h", "soc0", "start_h", "energy_kwh", "duration_h"])
        for p in profiles:
            for s, m, a, c, t, e, d in zip(p.station, p.model, p.arrival_h, p.soc0,
                                           p.start_h, p.energy_kwh, p.duration_h):
                w.writerow([p.evci_id, int(s) + 1, EV_MODELS[int(m)].name, repr(float(a)),
                            repr(float(c)), repr(float(t)), repr(float(e)), repr(float(d))])


def report_json(rep: TimeSeriesReport) -> str:
    d = rep.summary()
    d["hourly"] = [
        {"hour": h, "min_voltage_pu": float(rep.min_voltage[h]), "loss_kw": _finite(rep.loss_kw[h]),
         "evci_kwh": [float(e) for e in rep.evci_kwh[h]], "period": rep.periods[h]}
        for h in range(rep.hours)
    ]
    return json.dumps(d, indent=2, allow_nan=False)


def _finite(x):
    x = float(x)
    return x if math.isfinite(x) else None
