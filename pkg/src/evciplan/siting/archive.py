"""Pareto archive, crowding-distance pruning, sigma leaders and fuzzy
best-compromise selection for two minimised objectives."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, NamedTuple, Sequence

import numpy as np

# Relative slack under which two fuzzy scores count as tied.
_TIE_RTOL = 1e-9


class ObjectivePair(NamedTuple):
    loss_kw: float
    sq_dev: float

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.loss_kw) and math.isfinite(self.sq_dev)


INFEASIBLE = ObjectivePair(math.inf, math.inf)


def dominates(a: Sequence[float], b: Sequence[float]) -> bool:
    """True iff ``a`` is no worse than ``b`` everywhere and better somewhere."""
    better = False
    for x, y in zip(a, b):
        if x > y:
            return False
        if x < y:
            better = True
    return better


Member = tuple[Hashable, ObjectivePair]


@dataclass(frozen=True)
class ParetoArchive:
    """Bounded set of mutually non-dominated ``(solution, objectives)`` pairs.

    ``solution`` is any hashable key; the optimiser uses the sorted tuple of
    EVCI bus ids. Two members with the same key are never both stored.
    """

    members: tuple[Member, ...] = ()
    capacity: int = 50

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def solutions(self) -> list:
        return [s for s, _ in self.members]

    @property
    def objectives(self) -> np.ndarray:
        if not self.members:
            return np.empty((0, 2))
        return np.array([f for _, f in self.members], dtype=float)

    def insert(self, solution: Hashable, objectives: Sequence[float]) -> "ParetoArchive":
        return archive_insert(self, (solution, objectives))


def archive_insert(arch: ParetoArchive, cand: tuple[Hashable, Sequence[float]]) -> ParetoArchive:
    """Insert ``cand`` if nothing in ``arch`` dominates it.

    Members dominated by the candidate are dropped. Non-finite candidates and
    keys already present are ignored. If the archive then exceeds its
    capacity it is pruned by crowding distance.
    """
    sol, f = cand
    f = ObjectivePair(float(f[0]), float(f[1]))
    if not f.feasible:
        return arch
    kept = []
    for s, g in arch.members:
        if s == sol or dominates(g, f):
            return arch
        if not dominates(f, g):
            kept.append((s, g))
    kept.append((sol, f))
    out = ParetoArchive(tuple(kept), arch.capacity)
    if len(out) > out.capacity:
        out = crowding_truncate(out)
    return out


def crowding_distance(objectives: np.ndarray) -> np.ndarray:
    """Crowding distance of each row of an ``(n, m)`` objective matrix.

    Boundary points of every objective get ``inf``. An objective with zero
    range contributes nothing.
    """
    f = np.asarray(objectives, dtype=float)
    n, m = f.shape
    d = np.zeros(n)
    if n <= 2:
        d[:] = np.inf
        return d
    for j in range(m):
        idx = np.argsort(f[:, j], kind="stable")
        d[idx[0]] = d[idx[-1]] = np.inf
        span = f[idx[-1], j] - f[idx[0], j]
        if span <= 0:
            continue
        gaps = (f[idx[2:], j] - f[idx[:-2], j]) / span
        d[idx[1:-1]] += gaps
    return d


def crowding_truncate(arch: ParetoArchive) -> ParetoArchive:
    """Keep the ``capacity`` members with the largest crowding distance."""
    if len(arch) <= arch.capacity:
        return arch
    d = crowding_distance(arch.objectives)
    keep = np.sort(np.argsort(-d, kind="stable")[: arch.capacity])
    return ParetoArchive(tuple(arch.members[i] for i in keep), arch.capacity)


def _normalise(f: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    span = hi - lo
    safe = np.where(span > 0, span, 1.0)
    return np.where(span > 0, (f - lo) / safe, 0.0)


def sigma_value(f: Sequence[float]) -> float:
    """Sigma coordinate of a two-objective point, 0 at the origin."""
    a, b = float(f[0]) ** 2, float(f[1]) ** 2
    if a + b == 0.0:
        return 0.0
    return (a - b) / (a + b)


def sigma_leader(objectives: Sequence[float], arch: ParetoArchive) -> Member:
    """Archive member whose sigma value is closest to the particle's.

    Objectives are min-max normalised over the archive first. Ties go to the
    member nearest in normalised objective space, then to archive order. A
    particle with non-finite objectives is treated as having sigma 0.
    """
    if not arch.members:
        raise ValueError("empty archive")
    F = arch.objectives
    lo, hi = F.min(axis=0), F.max(axis=0)
    Fn = _normalise(F, lo, hi)
    sig = np.array([sigma_value(row) for row in Fn])
    p = np.asarray(objectives, dtype=float)
    if np.all(np.isfinite(p)):
        pn = _normalise(p, lo, hi)
        sk = sigma_value(pn)
        dist = np.hypot(*(Fn - pn).T)
    else:
        sk = 0.0
        dist = np.zeros(len(F))
    gap = np.abs(sig - sk)
    best = 0
    for i in range(1, len(F)):
        if gap[i] < gap[best] or (gap[i] == gap[best] and dist[i] < dist[best]):
            best = i
    return arch.members[best]


def fuzzy_memberships(objectives: np.ndarray) -> np.ndarray:
    """Linear fuzzy membership of every objective value, shape ``(n, m)``.

    1 at the best (smallest) value in the set, 0 at the worst, linear
    in between. A constant objective gives membership 1 everywhere.
    """
    F = np.asarray(objectives, dtype=float)
    lo, hi = F.min(axis=0), F.max(axis=0)
    span = hi - lo
    mu = np.where(span > 0, (hi - F) / np.where(span > 0, span, 1.0), 1.0)
    return np.clip(mu, 0.0, 1.0)


def best_compromise(arch: ParetoArchive) -> tuple[Hashable, ObjectivePair, float]:
    """Member with the largest normalised fuzzy membership sum.

    Returns ``(solution, objectives, mu)``. Near-equal scores are resolved by
    lower loss, then archive order.
    """
    if not arch.members:
        raise ValueError("empty archive")
    F = arch.objectives
    score = fuzzy_memberships(F).sum(axis=1)
    mu = score / score.sum()
    best = 0
    for i in range(1, len(F)):
        tie = abs(mu[i] - mu[best]) <= _TIE_RTOL * max(abs(mu[i]), abs(mu[best]))
        if (not tie and mu[i] > mu[best]) or (tie and F[i, 0] < F[best, 0]):
            best = i
    sol, f = arch.members[best]
    return sol, f, float(mu[best])
