"""Exhaustive placement search: every combination of candidate buses."""
from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from ..loadflow import LoadFlowConfig
from ..network import FeederNetwork
from .archive import ObjectivePair, ParetoArchive, best_compromise
from .evaluate import evaluate_locations
from .mopso import SitingError

DEFAULT_BUDGET = 250_000
CHUNK = 16_384


class BudgetExceeded(SitingError):
    pass


@dataclass
class ExhaustiveReport:
    combos: np.ndarray          # (K, n_evci) bus ids
    objectives: np.ndarray      # (K, 2)
    front: np.ndarray           # indices into combos, ascending loss
    best_locations: tuple[int, ...]
    best_objectives: ObjectivePair
    best_mu: float
    evci_kw: float

    @property
    def n_evaluations(self) -> int:
        return len(self.combos)

    def to_dict(self) -> dict:
        return {
            "evaluations": self.n_evaluations,
            "evci_kw": self.evci_kw,
            "best_locations": list(self.best_locations),
            "best_loss_kw": self.best_objectives[0],
            "best_sq_dev": self.best_objectives[1],
            "best_mu": self.best_mu,
            "front": [
                {"locations": [int(b) for b in self.combos[i]],
                 "loss_kw": float(self.objectives[i, 0]),
                 "sq_dev": float(self.objectives[i, 1])}
                for i in self.front
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def write_cloud(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["loss_kw", "sq_dev"])
            for a, b in self.objectives:
                w.writerow([repr(float(a)), repr(float(b))])


def pareto_front_indices(F: np.ndarray) -> np.ndarray:
    """Indices of the non-dominated rows of a two-column objective matrix.

    Rows sharing an identical pair are all kept. Result is ordered by
    ascending first objective, then second.
    """
    F = np.asarray(F, dtype=float)
    finite = np.flatnonzero(np.all(np.isfinite(F), axis=1))
    if finite.size == 0:
        return finite
    idx = finite[np.lexsort((F[finite, 1], F[finite, 0]))]
    keep = []
    best_prev = math.inf       # min f2 among rows with strictly smaller f1
    i = 0
    while i < len(idx):
        j = i
        f1 = F[idx[i], 0]
        while j < len(idx) and F[idx[j], 0] == f1:
            j += 1
        group_min = F[idx[i], 1]
        if group_min < best_prev:
            for k in idx[i:j]:
                if F[k, 1] == group_min:
                    keep.append(k)
            best_prev = group_min
        i = j
    return np.array(keep, dtype=np.intp)


def _eval_chunk(args):
    net, evci_kw, combos, lf = args
    return evaluate_locations(net, evci_kw, combos, lf)


def enumerate_all(net: FeederNetwork, evci_kw: float, n_evci: int,
                  lf: LoadFlowConfig = LoadFlowConfig(), budget: int = DEFAULT_BUDGET,
                  workers: int = 1) -> ExhaustiveReport:
    """Evaluate every ``C(n_bus - 1, n_evci)`` placement.

    Chunks may be spread across ``workers`` processes; results are
    reassembled in combination order so the report does not depend on the
    worker count.
    """
    n_cand = net.n_bus - 1
    if not 1 <= n_evci <= n_cand:
        raise ValueError(f"n_evci must be in [1, {n_cand}]")
    total = math.comb(n_cand, n_evci)
    if total > budget:
        raise BudgetExceeded(
            f"{total} combinations exceed the budget of {budget}; use the MOPSO optimizer instead"
        )
    combos = np.array(list(combinations(range(2, net.n_bus + 1), n_evci)), dtype=np.intp)
    chunks = [(net, evci_kw, combos[s:s + CHUNK], lf) for s in range(0, total, CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_eval_chunk, chunks))
    else:
        parts = [_eval_chunk(c) for c in chunks]
    F = np.concatenate(parts, axis=0)
    front = pareto_front_indices(F)
    if front.size == 0:
        raise SitingError("no feasible placement")
    arch = ParetoArchive(
        tuple((tuple(int(b) for b in combos[i]), ObjectivePair(*map(float, F[i]))) for i in front),
        capacity=len(front),
    )
    sol, f, mu = best_compromise(arch)
    return ExhaustiveReport(combos, F, front, sol, f, mu, evci_kw)
