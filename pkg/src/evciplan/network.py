"""Radial feeder data model and CSV ingestion.

Bus ids are 1-based; bus 1 is the substation (slack). Loads are stored in
kW / kvar and impedances in ohm; per-unit conversion happens in the load flow.
"""
from __future__ import annotations

import csv
from collections import deque
from dataclasses import dataclass, field, replace
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

SUBSTATION = 1

BUS_HEADER = ["bus_id", "p_kw", "q_kvar"]
BRANCH_HEADER = ["branch_id", "from_bus", "to_bus", "r_ohm", "x_ohm"]
SCALING_HEADER = ["hour", "multiplier"]


class FeederError(ValueError):
    """Invalid feeder data or topology."""


@dataclass(frozen=True)
class Bus:
    id: int
    p_load: float = 0.0
    q_load: float = 0.0

    def __post_init__(self):
        if self.id < 1:
            raise FeederError(f"bus id must be >= 1, got {self.id}")
        if self.p_load < 0:
            raise FeederError(f"bus {self.id}: negative p_load {self.p_load}")


@dataclass(frozen=True)
class Branch:
    id: int
    from_bus: int
    to_bus: int
    r: float
    x: float

    def __post_init__(self):
        if self.r < 0 or self.x < 0:
            raise FeederError(f"branch {self.id}: negative impedance")
        if self.from_bus == self.to_bus:
            raise FeederError(f"branch {self.id}: from_bus == to_bus ({self.from_bus})")


@dataclass(frozen=True)
class FeederNetwork:
    """Immutable radial feeder rooted at bus 1.

    Construction validates the tree structure; the derived topology arrays
    (``order``, ``parent``, ``parent_branch``) are 0-based indices into
    ``buses`` / ``branches`` and are computed once.
    """

    base_kv: float
    base_mva: float
    buses: tuple[Bus, ...]
    branches: tuple[Branch, ...]

    def __post_init__(self):
        object.__setattr__(self, "buses", tuple(self.buses))
        object.__setattr__(self, "branches", tuple(self.branches))
        if self.base_kv <= 0 or self.base_mva <= 0:
            raise FeederError("base_kv and base_mva must be positive")
        ids = [b.id for b in self.buses]
        if len(set(ids)) != len(ids):
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise FeederError(f"duplicate bus id(s): {dup}")
        if ids != list(range(1, len(ids) + 1)):
            raise FeederError("bus ids must be 1..N in ascending order")
        if len(self.branches) != len(self.buses) - 1:
            raise FeederError(
                f"not radial: {len(self.branches)} branches for {len(self.buses)} buses"
            )
        for br in self.branches:
            for b in (br.from_bus, br.to_bus):
                if not 1 <= b <= len(self.buses):
                    raise FeederError(f"branch {br.id} references unknown bus {b}")
        # Forces the topology check at construction time.
        self._topology  # noqa: B018

    @property
    def n_bus(self) -> int:
        return len(self.buses)

    @property
    def p_kw(self) -> np.ndarray:
        return np.array([b.p_load for b in self.buses], dtype=float)

    @property
    def q_kvar(self) -> np.ndarray:
        return np.array([b.q_load for b in self.buses], dtype=float)

    @property
    def total_p_kw(self) -> float:
        return float(sum(b.p_load for b in self.buses))

    @property
    def z_base(self) -> float:
        return self.base_kv**2 / self.base_mva

    @cached_property
    def _topology(self):
        n = self.n_bus
        adj: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for k, br in enumerate(self.branches):
            adj[br.from_bus - 1].append((br.to_bus - 1, k))
            adj[br.to_bus - 1].append((br.from_bus - 1, k))
        parent = np.full(n, -1, dtype=np.intp)
        parent_branch = np.full(n, -1, dtype=np.intp)
        seen = np.zeros(n, dtype=bool)
        seen[0] = True
        order = []
        queue = deque([0])
        while queue:
            u = queue.popleft()
            order.append(u)
            for v, k in sorted(adj[u]):
                if seen[v]:
                    if k != parent_branch[u]:
                        raise FeederError("not radial: cycle detected")
                    continue
                seen[v] = True
                parent[v] = u
                parent_branch[v] = k
                queue.append(v)
        if not seen.all():
            missing = [i + 1 for i in np.flatnonzero(~seen)]
            raise FeederError(f"not radial: buses {missing} unreachable from bus 1")
        return np.array(order, dtype=np.intp), parent, parent_branch

    @property
    def order(self) -> np.ndarray:
        """Bus indices in breadth-first order from the substation."""
        return self._topology[0]

    @property
    def parent(self) -> np.ndarray:
        return self._topology[1]

    @property
    def parent_branch(self) -> np.ndarray:
        return self._topology[2]

    def path_to_root(self, bus_id: int) -> list[int]:
        """Bus ids from ``bus_id`` up to the substation, inclusive."""
        path = [bus_id]
        i = bus_id - 1
        while self.parent[i] >= 0:
            i = int(self.parent[i])
            path.append(i + 1)
        return path

    def with_loads(self, p_kw: Sequence[float], q_kvar: Sequence[float] | None = None) -> "FeederNetwork":
        if q_kvar is None:
            q_kvar = self.q_kvar
        if len(p_kw) != self.n_bus or len(q_kvar) != self.n_bus:
            raise FeederError("load vectors must have one entry per bus")
        buses = tuple(
            Bus(b.id, float(p), float(q)) for b, p, q in zip(self.buses, p_kw, q_kvar)
        )
        return replace(self, buses=buses)


@dataclass(frozen=True)
class Placement:
    """A set of EVCI bus locations, each adding ``evci_kw`` of demand."""

    locations: tuple[int, ...]
    evci_kw: float = 1000.0

    def __post_init__(self):
        locs = tuple(sorted(int(b) for b in self.locations))
        if not locs:
            raise FeederError("placement needs at least one location")
        if len(set(locs)) != len(locs):
            raise FeederError(f"duplicate EVCI locations: {list(self.locations)}")
        if locs[0] <= SUBSTATION:
            raise FeederError("EVCI cannot be placed at the substation (bus 1)")
        if self.evci_kw < 0:
            raise FeederError("evci_kw must be non-negative")
        object.__setattr__(self, "locations", locs)

    @property
    def n_evci(self) -> int:
        return len(self.locations)

    def check(self, net: FeederNetwork) -> None:
        bad = [b for b in self.locations if b > net.n_bus]
        if bad:
            raise FeederError(f"locations {bad} out of range [2, {net.n_bus}]")


def apply_placement(net: FeederNetwork, pl: Placement) -> FeederNetwork:
    """Return a copy of ``net`` with ``pl.evci_kw`` added at each location."""
    pl.check(net)
    p = net.p_kw
    p[np.asarray(pl.locations) - 1] += pl.evci_kw
    return net.with_loads(p)


# -- CSV ingestion -----------------------------------------------------------

def _read_rows(path: Path, header: list[str]) -> Iterable[tuple[int, dict]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [h.strip() for h in reader.fieldnames] != header:
            raise FeederError(f"{path}: expected header {','.join(header)}")
        for lineno, row in enumerate(reader, start=2):
            yield lineno, row


def _parse(path, lineno, row, key, conv):
    try:
        return conv(row[key])
    except (TypeError, ValueError):
        raise FeederError(f"{path}: row {lineno}: bad {key} value {row.get(key)!r}") from None


def load_feeder(bus_file, branch_file, base_kv: float = 12.66, base_mva: float = 100.0) -> FeederNetwork:
    """Read bus and branch CSVs into a validated :class:`FeederNetwork`."""
    bus_file, branch_file = Path(bus_file), Path(branch_file)
    buses = []
    for lineno, row in _read_rows(bus_file, BUS_HEADER):
        try:
            buses.append(Bus(
                _parse(bus_file, lineno, row, "bus_id", int),
                _parse(bus_file, lineno, row, "p_kw", float),
                _parse(bus_file, lineno, row, "q_kvar", float),
            ))
        except FeederError as exc:
            if str(exc).startswith(str(bus_file)):
                raise
            raise FeederError(f"{bus_file}: row {lineno}: {exc}") from None
    branches = []
    for lineno, row in _read_rows(branch_file, BRANCH_HEADER):
        try:
            branches.append(Branch(
                _parse(branch_file, lineno, row, "branch_id", int),
                _parse(branch_file, lineno, row, "from_bus", int),
                _parse(branch_file, lineno, row, "to_bus", int),
                _parse(branch_file, lineno, row, "r_ohm", float),
                _parse(branch_file, lineno, row, "x_ohm", float),
            ))
        except FeederError as exc:
            if str(exc).startswith(str(branch_file)):
                raise
            raise FeederError(f"{branch_file}: row {lineno}: {exc}") from None
    return FeederNetwork(base_kv, base_mva, tuple(buses), tuple(branches))


def load_feeder_dir(directory, base_kv: float = 12.66, base_mva: float = 100.0) -> FeederNetwork:
    """Load ``buses.csv`` and ``branches.csv`` from one directory."""
    d = Path(directory)
    return load_feeder(d / "buses.csv", d / "branches.csv", base_kv, base_mva)


def save_feeder(net: FeederNetwork, bus_file, branch_file) -> None:
    with open(bus_file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BUS_HEADER)
        for b in net.buses:
            w.writerow([b.id, repr(float(b.p_load)), repr(float(b.q_load))])
    with open(branch_file, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(BRANCH_HEADER)
        for br in net.branches:
            w.writerow([br.id, br.from_bus, br.to_bus, repr(float(br.r)), repr(float(br.x))])


def ieee33() -> FeederNetwork:
    """The bundled IEEE 33-bus feeder (12.66 kV, 100 MVA base)."""
    root = resources.files("evciplan") / "data" / "ieee33"
    with resources.as_file(root) as d:
        return load_feeder_dir(d, 12.66, 100.0)


def load_scaling(path) -> np.ndarray:
    """Read an ``hour,multiplier`` CSV; hours must be 0..H-1 in order."""
    path = Path(path)
    values = []
    for lineno, row in _read_rows(path, SCALING_HEADER):
        hour = _parse(path, lineno, row, "hour", int)
        if hour != len(values):
            raise FeederError(f"{path}: row {lineno}: expected hour {len(values)}, got {hour}")
        values.append(_parse(path, lineno, row, "multiplier", float))
    return np.array(values, dtype=float)


def save_scaling(path, multipliers) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SCALING_HEADER)
        for h, m in enumerate(multipliers):
            w.writerow([h, repr(float(m))])


def diurnal_scaling(hours: int, seed: int = 0, noise: float = 0.10) -> np.ndarray:
    """Synthetic hourly load multipliers with a morning and an evening peak.

    The clean curve peaks at 1.0 (the nominal feeder load) around 19:00,
    with a smaller morning peak near 08:00 and a night trough near 0.45.
    Multiplicative noise is uniform in ``[1 - noise, 1 + noise]``.
    """
    rng = np.random.default_rng(seed)
    h = np.arange(hours) % 24
    morning = np.exp(-0.5 * ((h - 8.0) / 2.0) ** 2)
    evening = np.exp(-0.5 * ((h - 19.0) / 2.5) ** 2)
    clean = 0.45 + 0.30 * morning + 0.55 * evening
    clean = clean / clean.max()
    return clean * rng.uniform(1.0 - noise, 1.0 + noise, size=hours)
