"""Multi-run MOPSO for EVCI siting.

Each particle carries a continuous position vector with one coordinate per
EVCI. After every move the position is snapped to distinct integer bus ids
in ``[2, n_bus]`` and kept sorted, so the vector always decodes to a valid
placement and its coordinates line up with the sorted personal-best and
leader vectors.

The velocity update is::

    v <- w*v + c1*r1*(pbest - x) + c2*r2*(leader - x)
    x <- x + v

with ``r1, r2`` drawn per coordinate and ``v`` clamped to ``±(n_bus - 2)``.
A coordinate that lands outside ``[2, n_bus]`` loses its velocity
(absorbing walls). With probability ``turbulence * (1 - t/max_iter)`` one
random coordinate of the moved particle is replaced by a uniformly drawn
bus; this is what lets a swarm that has settled on one end of the front
swap a single EVCI and reach the other end.

``PsoConfig.literal()`` gives the plain update (unit inertia, no walls, no
turbulence, short stall window), which on the 33-bus case usually stops
before the low-deviation end of the front has been found.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ..loadflow import LoadFlowConfig, objectives, solve
from ..network import FeederNetwork, Placement
from .archive import ObjectivePair, ParetoArchive, archive_insert, best_compromise, dominates, sigma_leader
from .evaluate import MemoEvaluator


class SitingError(RuntimeError):
    pass


@dataclass(frozen=True)
class PsoConfig:
    swarm_size: int = 50
    max_iter: int = 100
    c1: float = 2.0
    c2: float = 2.0
    a_max: int = 50
    k_repeat: int = 100         # stall window inside one run, in iterations
    max_run: int = 10
    seed: int = 0
    inertia: float = 0.4
    absorb_walls: bool = True
    turbulence: float = 0.5
    k_runs: int = 3             # consecutive agreeing runs that end the search

    def __post_init__(self):
        for name in ("swarm_size", "max_iter", "a_max", "k_repeat", "max_run", "k_runs"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.c1 <= 0 or self.c2 <= 0:
            raise ValueError("c1 and c2 must be positive")
        if self.inertia < 0:
            raise ValueError("inertia must be non-negative")
        if not 0 <= self.turbulence <= 1:
            raise ValueError("turbulence must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def literal(cls, **kw) -> "PsoConfig":
        base = dict(k_repeat=10, inertia=1.0, absorb_walls=False, turbulence=0.0, k_runs=10)
        base.update(kw)
        return cls(**base)


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_objectives: ObjectivePair
    objectives: ObjectivePair = ObjectivePair(np.inf, np.inf)

    @property
    def placement(self) -> tuple[int, ...]:
        return tuple(int(b) for b in self.position)


def repair(position: np.ndarray, n_bus: int) -> np.ndarray:
    """Round, clamp to ``[2, n_bus]`` and de-duplicate, in coordinate order.

    A coordinate colliding with an earlier one moves to the nearest unused
    bus, preferring the lower id on equal distance.
    """
    pos = np.clip(np.rint(np.asarray(position, dtype=float)), 2, n_bus).astype(int)
    if len(pos) > n_bus - 1:
        raise ValueError(f"cannot place {len(pos)} EVCIs on {n_bus - 1} candidate buses")
    used: set[int] = set()
    out = np.empty_like(pos)
    for i, b in enumerate(pos):
        if b in used:
            for d in range(1, n_bus):
                if b - d >= 2 and b - d not in used:
                    b = b - d
                    break
                if b + d <= n_bus and b + d not in used:
                    b = b + d
                    break
        used.add(int(b))
        out[i] = b
    return out


def _canonical(position: np.ndarray, velocity: np.ndarray, n_bus: int):
    pos = repair(position, n_bus)
    order = np.argsort(pos, kind="stable")
    return pos[order].astype(float), np.asarray(velocity, dtype=float)[order]


def step(p: Particle, leader, cfg: PsoConfig, rng: np.random.Generator, n_bus: int,
         it: int = 0) -> Particle:
    """Move one particle toward its personal best and its leader."""
    x = p.position
    lead = np.asarray(leader, dtype=float)
    r1 = rng.random(x.size)
    r2 = rng.random(x.size)
    v = cfg.inertia * p.velocity + cfg.c1 * r1 * (p.pbest_position - x) + cfg.c2 * r2 * (lead - x)
    vmax = n_bus - 2
    v = np.clip(v, -vmax, vmax)
    raw = x + v
    if cfg.absorb_walls:
        v = np.where((raw < 2) | (raw > n_bus), 0.0, v)
    if cfg.turbulence > 0 and rng.random() < cfg.turbulence * (1 - it / cfg.max_iter):
        raw = raw.copy()
        raw[rng.integers(x.size)] = rng.integers(2, n_bus + 1)
    pos, v = _canonical(raw, v, n_bus)
    return Particle(pos, v, p.pbest_position, p.pbest_objectives, p.objectives)


@dataclass
class RunTrace:
    run: int
    iterations: int
    converged: bool
    best_locations: tuple[int, ...]
    best_objectives: ObjectivePair
    best_mu: float
    front: list[tuple[tuple[int, ...], ObjectivePair]]

    def to_dict(self) -> dict:
        return {
            "run": self.run,
            "iterations": self.iterations,
            "converged": self.converged,
            "best_locations": list(self.best_locations),
            "best_objectives": list(self.best_objectives),
            "best_mu": self.best_mu,
            "front": [{"locations": list(s), "loss_kw": f[0], "sq_dev": f[1]} for s, f in self.front],
        }


@dataclass
class SitingReport:
    locations: tuple[int, ...]
    objectives: ObjectivePair
    mu: float
    evci_kw: float
    runs: list[RunTrace] = field(default_factory=list)
    best_archive: list[tuple[tuple[int, ...], ObjectivePair]] = field(default_factory=list)
    load_flows: int = 0
    config: PsoConfig | None = None

    def to_dict(self) -> dict:
        return {
            "locations": list(self.locations),
            "evci_kw": self.evci_kw,
            "loss_kw": self.objectives[0],
            "sq_dev": self.objectives[1],
            "mu": self.mu,
            "load_flows": self.load_flows,
            "config": None if self.config is None else self.config.__dict__,
            "best_archive": [{"locations": list(s), "loss_kw": f[0], "sq_dev": f[1]} for s, f in self.best_archive],
            "runs": [r.to_dict() for r in self.runs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _run_once(run: int, evaluate: MemoEvaluator, n_evci: int, cfg: PsoConfig,
              rng: np.random.Generator) -> RunTrace:
    n_bus = evaluate.net.n_bus
    swarm = []
    for _ in range(cfg.swarm_size):
        pos, vel = _canonical(rng.uniform(2, n_bus, n_evci), np.zeros(n_evci), n_bus)
        swarm.append(Particle(pos, vel, pos.copy(), ObjectivePair(np.inf, np.inf)))

    arch = ParetoArchive(capacity=cfg.a_max)

    def absorb(arch):
        objs = evaluate([p.placement for p in swarm])
        for p, f in zip(swarm, objs):
            f = ObjectivePair(*f)
            p.objectives = f
            if dominates(f, p.pbest_objectives):
                p.pbest_position = p.position.copy()
                p.pbest_objectives = f
            arch = archive_insert(arch, (p.placement, f))
        return arch

    arch = absorb(arch)
    if not arch.members:
        raise SitingError("no feasible placement")
    last = best_compromise(arch)[0]
    repeats = 1
    it = 0
    while it < cfg.max_iter and repeats < cfg.k_repeat:
        it += 1
        leaders = [np.array(sigma_leader(p.objectives, arch)[0], dtype=float) for p in swarm]
        swarm = [step(p, lead, cfg, rng, n_bus, it) for p, lead in zip(swarm, leaders)]
        arch = absorb(arch)
        current = best_compromise(arch)[0]
        repeats = repeats + 1 if current == last else 1
        last = current
    sol, f, mu = best_compromise(arch)
    return RunTrace(run, it, repeats >= cfg.k_repeat, sol, f, mu, list(arch.members))


def run_mopso(net: FeederNetwork, evci_kw: float, n_evci: int, cfg: PsoConfig = PsoConfig(),
              lf: LoadFlowConfig = LoadFlowConfig()) -> SitingReport:
    """Independent MOPSO runs; the final answer is the best compromise of
    the archive of per-run best compromises.

    Stops early once ``k_runs`` consecutive runs agree on the same placement.
    """
    if n_evci == 0:
        base = ObjectivePair(*objectives(solve(net, lf), lf))
        return SitingReport((), base, 1.0, evci_kw, load_flows=1, config=cfg)
    if not 1 <= n_evci <= net.n_bus - 1:
        raise ValueError(f"n_evci must be in [0, {net.n_bus - 1}]")
    evaluate = MemoEvaluator(net, evci_kw, lf)
    seeds = np.random.SeedSequence(cfg.seed).spawn(cfg.max_run)
    best = ParetoArchive(capacity=max(cfg.max_run, cfg.a_max))
    runs: list[RunTrace] = []
    for r, ss in enumerate(seeds):
        # memo is per run
        evaluate.cache.clear()
        trace = _run_once(r, evaluate, n_evci, cfg, np.random.default_rng(ss))
        runs.append(trace)
        best = archive_insert(best, (trace.best_locations, trace.best_objectives))
        tail = [t.best_locations for t in runs[-cfg.k_runs:]]
        if len(tail) == cfg.k_runs and len(set(tail)) == 1:
            break
    sol, f, mu = best_compromise(best)
    return SitingReport(sol, f, mu, evci_kw, runs, list(best.members), evaluate.load_flows, cfg)


def to_placement(report: SitingReport) -> Placement:
    return Placement(report.locations, report.evci_kw)
