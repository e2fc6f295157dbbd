"""Command-line pipeline: enumerate, optimize, simulate, price, forecast.

Every command writes plain CSV/JSON into ``--out`` together with a
``manifest.json`` recording the effective configuration, its hash, the
seed and a digest of every output file. Set ``SOURCE_DATE_EPOCH`` to pin
the manifest timestamp and make output trees byte-identical across runs.

Exit codes: 0 success, 2 bad usage or input, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .evsim import (
    SimConfig,
    classify_periods,
    load_profiles,
    report_json,
    run_timeseries,
    save_profiles,
    save_sessions,
    simulate_evci,
)
from .forecast import (
    ForecastError,
    fit,
    forecast,
    residual_normality,
    rolling_forecast,
    score,
    select_order,
)
from .loadflow import LoadFlowConfig, objectives, solve
from .network import (
    FeederError,
    Placement,
    apply_placement,
    diurnal_scaling,
    ieee33,
    load_feeder_dir,
    load_scaling,
    save_scaling,
)
from .pricing import (
    GridPriceSeries,
    Tariff,
    evci_prices,
    ledgers_json,
    load_grid_price,
    save_grid_price,
    settle,
    synthetic_grid_price,
    write_price_csv,
)
from .siting import BudgetExceeded, PsoConfig, SitingError, dominates, enumerate_all, run_mopso

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class InputError(Exception):
    pass


class NumericalFailure(Exception):
    pass


# --- configuration -------------------------------------------------------

DEFAULTS = {
    "loadflow": dataclasses.asdict(LoadFlowConfig()),
    "siting": {**{k: v for k, v in dataclasses.asdict(PsoConfig()).items() if k != "seed"},
               "n_evci": 5, "evci_kw": 1000.0, "budget": 250_000},
    "evsim": {k: v for k, v in dataclasses.asdict(SimConfig()).items() if k != "seed"},
    "pricing": dataclasses.asdict(Tariff()),
    "forecast": {"holdout": 168, "max_p": 3, "max_d": 2, "max_q": 3, "order": None,
                 "mode": "multistep", "include_mean": True},
}


def load_config(path) -> dict:
    cfg = json.loads(json.dumps(DEFAULTS))
    if path is None:
        return cfg
    try:
        with open(path) as fh:
            user = json.load(fh)
    except FileNotFoundError:
        raise InputError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from None
    for section, values in user.items():
        if section not in cfg or not isinstance(values, dict):
            raise InputError(f"{path}: unknown config section {section!r}")
        for k, v in values.items():
            if k not in cfg[section]:
                raise InputError(f"{path}: unknown key {section}.{k}")
            cfg[section][k] = v
    return cfg


def _override(cfg: dict, section: str, **flags) -> None:
    for k, v in flags.items():
        if v is not None:
            cfg[section][k] = v


def _lf(cfg) -> LoadFlowConfig:
    return LoadFlowConfig(**cfg["loadflow"])


def _feeder(args):
    if args.feeder is None:
        return ieee33()
    d = Path(args.feeder)
    if not d.is_dir():
        raise InputError(f"feeder directory not found: {d}")
    return load_feeder_dir(d)


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = datetime.fromtimestamp(int(epoch), timezone.utc) if epoch else datetime.now(timezone.utc)
    return t.replace(microsecond=0).isoformat()


def write_manifest(out: Path, command: str, config: dict, seed: int, inputs: dict) -> None:
    files = sorted(p for p in out.rglob("*") if p.is_file() and p.name != "manifest.json")
    body = {"command": command, "config": config, "inputs": inputs}
    blob = json.dumps(body, sort_keys=True).encode()
    manifest = {
        "command": command,
        "tool_version": __version__,
        "seed": seed,
        "config_hash": hashlib.sha256(blob).hexdigest(),
        "config": config,
        "inputs": inputs,
        "outputs": {str(p.relative_to(out)): _sha256(p) for p in files},
        "timestamps": {"created": _timestamp()},
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2) + "\n")


def _feeder_inputs(args) -> dict:
    if args.feeder is None:
        return {"feeder": "bundled:ieee33"}
    d = Path(args.feeder)
    return {"feeder": {f.name: _sha256(f) for f in sorted(d.glob("*.csv"))}}


# --- enumerate -----------------------------------------------------------

def cmd_enumerate(args) -> int:
    cfg = load_config(args.config)
    _override(cfg, "siting", n_evci=args.n, evci_kw=args.evci_kw, budget=args.budget)
    s = cfg["siting"]
    net = _feeder(args)
    rep = enumerate_all(net, s["evci_kw"], s["n_evci"], _lf(cfg), s["budget"], args.workers or 1)
    out = _outdir(args)
    rep.write_cloud(out / "cloud.csv")
    d = rep.to_dict()
    _write_json(out / "front.json", {"evaluations": d["evaluations"], "front": d["front"]})
    _write_json(out / "best.json", {k: d[k] for k in
                                    ("best_locations", "best_loss_kw", "best_sq_dev", "best_mu", "evci_kw")})
    write_manifest(out, "enumerate", {"loadflow": cfg["loadflow"], "siting": s}, args.seed or 0,
                   _feeder_inputs(args))
    print(f"{rep.n_evaluations} placements, {len(rep.front)} on the front; "
          f"best compromise {list(rep.best_locations)}")
    return EXIT_OK


# --- optimize ------------------------------------------------------------

def comparison_table(net, locations, evci_kw, lf: LoadFlowConfig) -> list[dict]:
    """Base case and placed case in the shape of the comparison table."""
    rows = []
    for label, locs in (("without_evci", ()), ("with_evci", tuple(locations))):
        n = net if not locs else apply_placement(net, Placement(locs, evci_kw))
        sol = solve(n, lf)
        loss, dev = objectives(sol, lf)
        vmin, vbus = sol.min_voltage
        lmin, lbr = sol.min_branch_loss
        rows.append({"case": label, "locations": list(locs), "loss_kw": loss, "sq_dev": dev,
                     "min_voltage_pu": vmin, "min_voltage_bus": vbus,
                     "min_line_loss_kw": lmin, "min_line_loss_line": lbr,
                     "converged": sol.converged and not sol.collapsed})
    return rows


def _write_table(path: Path, rows: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parameter"] + [r["case"] for r in rows])
        w.writerow(["locations"] + [" ".join(map(str, r["locations"])) or "-" for r in rows])
        for key in ("loss_kw", "sq_dev", "min_voltage_pu", "min_voltage_bus",
                    "min_line_loss_kw", "min_line_loss_line", "converged"):
            w.writerow([key] + [r[key] for r in rows])


def cmd_optimize(args) -> int:
    cfg = load_config(args.config)
    _override(cfg, "siting", n_evci=args.n, evci_kw=args.evci_kw, max_run=args.max_run,
              swarm_size=args.swarm_size, max_iter=args.max_iter)
    s = cfg["siting"]
    if args.literal:
        s.update(k_repeat=10, inertia=1.0, absorb_walls=False, turbulence=0.0, k_runs=10)
    seed = args.seed if args.seed is not None else 0
    net = _feeder(args)
    lf = _lf(cfg)
    pso_keys = {f.name for f in dataclasses.fields(PsoConfig)}
    pso = PsoConfig(**{k: v for k, v in s.items() if k in pso_keys}, seed=seed)
    rep = run_mopso(net, s["evci_kw"], s["n_evci"], pso, lf)
    out = _outdir(args)
    _write_json(out / "siting.json", rep.to_dict())
    _write_json(out / "placement.json", {"locations": list(rep.locations), "evci_kw": rep.evci_kw})
    rows = comparison_table(net, rep.locations, rep.evci_kw, lf)
    _write_json(out / "table.json", rows)
    _write_table(out / "table.csv", rows)
    status = EXIT_OK
    if args.verify_oracle:
        orc = enumerate_all(net, s["evci_kw"], s["n_evci"], lf, s["budget"], args.workers or 1)
        F = orc.objectives
        dominated = bool(np.any(np.all(F <= rep.objectives, axis=1) & np.any(F < rep.objectives, axis=1)))
        verdict = {
            "evaluations": orc.n_evaluations,
            "non_dominated": not dominated,
            "matches_oracle_best": tuple(rep.locations) == tuple(orc.best_locations),
            "oracle_best_locations": list(orc.best_locations),
            "oracle_best_loss_kw": orc.best_objectives[0],
            "oracle_best_sq_dev": orc.best_objectives[1],
        }
        _write_json(out / "oracle.json", verdict)
        print(f"oracle: non-dominated={not dominated}, matches best={verdict['matches_oracle_best']}")
        if dominated:
            status = EXIT_NUMERIC
    write_manifest(out, "optimize", {"loadflow": cfg["loadflow"], "siting": s,
                                     "verify_oracle": bool(args.verify_oracle)}, seed, _feeder_inputs(args))
    print(f"placement {list(rep.locations)}: loss {rep.objectives[0]:.3f} kW, "
          f"sq. deviation {rep.objectives[1]:.6f}")
    return status


# --- simulate ------------------------------------------------------------

def _parse_locations(text: str) -> tuple[int, ...]:
    try:
        return tuple(sorted(int(t) for t in text.replace(" ", "").split(",") if t))
    except ValueError:
        raise InputError(f"bad --locations value {text!r}") from None


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    _override(cfg, "evsim", horizon_days=args.days)
    seed = args.seed if args.seed is not None else 0
    net = _feeder(args)
    inputs = _feeder_inputs(args)
    if args.locations:
        locs = _parse_locations(args.locations)
        inputs["locations"] = list(locs)
    elif args.placement:
        p = Path(args.placement)
        if not p.is_file():
            raise InputError(f"placement file not found: {p}")
        locs = tuple(json.loads(p.read_text())["locations"])
        inputs["placement"] = _sha256(p)
    else:
        raise InputError("give --placement FILE or --locations LIST")
    pl = Placement(locs)
    pl.check(net)
    sim = SimConfig(**cfg["evsim"], seed=seed)
    if args.scaling:
        scale = load_scaling(args.scaling)
        inputs["scaling"] = _sha256(Path(args.scaling))
        if len(scale) != sim.hours:
            raise InputError(f"scaling file has {len(scale)} hours, horizon is {sim.hours}")
    else:
        scale = diurnal_scaling(sim.hours, seed)
    profiles = simulate_evci(sim, pl.n_evci)
    rep = run_timeseries(net, pl, profiles, scale, _lf(cfg))
    out = _outdir(args)
    save_profiles(out / "profiles.csv", profiles)
    save_sessions(out / "sessions.csv", profiles)
    save_scaling(out / "scaling.csv", scale)
    rep.write_csv(out / "timeseries.csv")
    rep.write_voltages(out / "voltages.csv")
    (out / "timeseries.json").write_text(report_json(rep) + "\n")
    _write_json(out / "placement.json", {"locations": list(pl.locations)})
    write_manifest(out, "simulate", {"loadflow": cfg["loadflow"], "evsim": cfg["evsim"]}, seed, inputs)
    n_ev = sum(p.n_sessions for p in profiles)
    print(f"{sim.hours} h, {n_ev} charging sessions, {len(rep.failed_hours)} failed hours")
    if rep.failed_hours and args.strict:
        print(f"error: load flow failed in hours {rep.failed_hours[:10]}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


# --- price ---------------------------------------------------------------

def _read_sessions(path: Path) -> dict[int, np.ndarray]:
    starts: dict[int, list] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            starts.setdefault(int(row["evci"]), []).append(float(row["start_h"]))
    return {k: np.array(v) for k, v in starts.items()}


def cmd_price(args) -> int:
    cfg = load_config(args.config)
    _override(cfg, "pricing", r_f=args.r_f, r_p=args.r_p, r_n=args.r_n, r_op=args.r_op)
    seed = args.seed if args.seed is not None else 0
    sim = Path(args.sim)
    prof_file = sim / "profiles.csv"
    if not prof_file.is_file():
        raise InputError(f"no profiles.csv in {sim}; run simulate first")
    kw = load_profiles(prof_file)
    H, n = kw.shape
    if H == 0 or H % 24:
        raise InputError("profiles must cover whole days")
    inputs = {"profiles": _sha256(prof_file)}
    sess_file = sim / "sessions.csv"
    starts = _read_sessions(sess_file) if sess_file.is_file() else {}
    if starts:
        inputs["sessions"] = _sha256(sess_file)
    if args.grid:
        grid = load_grid_price(args.grid)
        inputs["grid"] = _sha256(Path(args.grid))
        if len(grid) != H:
            raise InputError(f"grid price has {len(grid)} hours, profiles have {H}")
    else:
        grid = synthetic_grid_price(H, seed)
    tariff = Tariff(**cfg["pricing"])
    periods = list(classify_periods(kw.sum(axis=1)))
    ledgers = []
    for d in range(H // 24):
        sl = slice(24 * d, 24 * d + 24)
        for k in range(n):
            st = np.mod(starts.get(k + 1, np.zeros(0)), H)
            st = st[(st >= 24 * d) & (st < 24 * d + 24)] - 24 * d
            ledgers.append(settle(kw[sl, k], periods[sl], tariff, grid.hourly[sl], k + 1, d,
                                  st if starts else None))
    out = _outdir(args)
    save_grid_price(out / "grid_price.csv", grid)
    write_price_csv(out / "price.csv", grid, tariff, periods)
    (out / "ledgers.json").write_text(ledgers_json(ledgers, tariff) + "\n")
    write_manifest(out, "price", {"pricing": cfg["pricing"]}, seed, inputs)
    day0 = [l for l in ledgers if l.day == 0]
    print("day 0 profit per EVCI: " + ", ".join(f"${l.profit:.2f}" for l in day0))
    return EXIT_OK


# --- forecast ------------------------------------------------------------

def read_price_series(path) -> np.ndarray:
    """Prices from ``hour,price`` or from the ``evci_price`` column of a
    price CSV written by ``price``."""
    p = Path(path)
    if p.is_dir():
        p = p / "price.csv"
    if not p.is_file():
        raise InputError(f"price file not found: {p}")
    with open(p, newline="") as fh:
        reader = csv.DictReader(fh)
        col = "evci_price" if "evci_price" in (reader.fieldnames or []) else "price"
        if col not in (reader.fieldnames or []):
            raise InputError(f"{p}: needs a 'price' or 'evci_price' column")
        try:
            return np.array([float(r[col]) for r in reader])
        except ValueError as exc:
            raise InputError(f"{p}: {exc}") from None


def cmd_forecast(args) -> int:
    cfg = load_config(args.config)
    _override(cfg, "forecast", holdout=args.holdout, mode=args.mode)
    if args.order:
        try:
            cfg["forecast"]["order"] = [int(v) for v in args.order.split(",")]
        except ValueError:
            raise InputError(f"bad --order {args.order!r}") from None
    f = cfg["forecast"]
    x = read_price_series(args.price)
    h = int(f["holdout"])
    if h < 2 or h >= len(x) - 10:
        raise InputError(f"holdout {h} does not fit a series of {len(x)} points")
    train, test = x[:-h], x[-h:]
    if f["order"] is not None:
        order = tuple(f["order"])
        selection = None
    else:
        sel = select_order(train, f["max_p"], f["max_d"], f["max_q"], include_mean=f["include_mean"])
        order = sel.order
        selection = {"order": list(sel.order), "adf": sel.d_adf, "p0": sel.p0, "q0": sel.q0, "bic": sel.candidates}
    m = fit(train, *order, include_mean=f["include_mean"])
    multi = forecast(m, train, h)
    roll = rolling_forecast(m, train, test)
    pred = multi if f["mode"] == "multistep" else roll
    out = _outdir(args)
    with open(out / "forecast.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["hour", "predicted", "actual"])
        for i, (p, a) in enumerate(zip(pred, test)):
            w.writerow([len(train) + i, repr(float(p)), repr(float(a))])
    norm = residual_normality(m, train)
    scores = {
        "mode": f["mode"],
        "train_points": len(train),
        "test_points": h,
        "order": list(order),
        "scores": score(pred, test).to_dict(),
        "multistep": score(multi, test).to_dict(),
        "rolling": score(roll, test).to_dict(),
        "residual_jb": None if norm.degenerate else norm.jb,
        "residual_gaussian": norm.gaussian,
    }
    _write_json(out / "scores.json", scores)
    (out / "model.json").write_text(m.to_json() + "\n")
    if selection is not None:
        _write_json(out / "selection.json", selection)
    write_manifest(out, "forecast", {"forecast": f}, args.seed or 0,
                   {"price": _sha256(Path(args.price) / "price.csv" if Path(args.price).is_dir()
                                     else Path(args.price))})
    s = scores["scores"]
    print(f"ARIMA{order}: RMSE {s['rmse']:.6f}  R2 {s['r2']}  MAE {s['mae']:.6f}")
    return EXIT_OK


# --- entry point ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--feeder", metavar="DIR", help="directory with buses.csv and branches.csv "
                        "(default: bundled IEEE 33-bus)")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", metavar="DIR", default="out")
    common.add_argument("--config", metavar="FILE", help="JSON file with per-module sections")
    common.add_argument("--workers", type=int, default=None, help="processes for enumeration")
    common.add_argument("--strict", action="store_true", help="exit 3 on load-flow failures")

    ap = argparse.ArgumentParser(prog="evciplan", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enumerate", parents=[common], help="evaluate every placement")
    p.add_argument("--n", type=int, default=None, help="number of EVCIs")
    p.add_argument("--evci-kw", type=float, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("optimize", parents=[common], help="MOPSO placement")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--evci-kw", type=float, default=None)
    p.add_argument("--max-run", type=int, default=None)
    p.add_argument("--swarm-size", type=int, default=None)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--literal", action="store_true",
                   help="plain velocity update (no inertia damping, walls or turbulence)")
    p.add_argument("--verify-oracle", action="store_true",
                   help="also enumerate and check the result is non-dominated")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", parents=[common], help="EV charging time series")
    p.add_argument("--placement", metavar="FILE", help="placement.json from optimize")
    p.add_argument("--locations", help="comma-separated bus ids")
    p.add_argument("--days", type=int, default=None)
    p.add_argument("--scaling", metavar="FILE", help="hour,multiplier CSV for the base loads")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("price", parents=[common], help="EVCI prices and daily ledgers")
    p.add_argument("--sim", metavar="DIR", required=True, help="output directory of simulate")
    p.add_argument("--grid", metavar="FILE", help="hour,price CSV in $/kWh")
    for name in ("r-f", "r-p", "r-n", "r-op"):
        p.add_argument(f"--{name}", type=float, default=None, help="$/kWh")
    p.set_defaults(func=cmd_price)

    p = sub.add_parser("forecast", parents=[common], help="ARIMA price forecast")
    p.add_argument("--price", metavar="FILE", required=True, help="price CSV or price output directory")
    p.add_argument("--holdout", type=int, default=None)
    p.add_argument("--order", help="p,d,q (default: selected from the data)")
    p.add_argument("--mode", choices=("multistep", "rolling"), default=None)
    p.set_defaults(func=cmd_forecast)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, FeederError, BudgetExceeded, ForecastError, FileNotFoundError,
            KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SitingError, NumericalFailure, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
