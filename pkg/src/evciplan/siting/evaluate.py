"""Objective evaluation of EVCI placements through the batched load flow.

Both the swarm optimiser and the exhaustive search call
:func:`evaluate_locations`, so a placement gets bit-identical objectives
whichever route evaluates it.
"""
from __future__ import annotations

import numpy as np

from ..loadflow import LoadFlowConfig, batch_objectives, solve_batch
from ..network import FeederNetwork


def evaluate_locations(net: FeederNetwork, evci_kw: float, locations: np.ndarray,
                       lf: LoadFlowConfig = LoadFlowConfig()) -> np.ndarray:
    """Objective pairs for each row of ``locations`` (1-based bus ids).

    Returns a ``(K, 2)`` array of ``(loss_kw, sq_dev)``; infeasible rows
    are ``inf``.
    """
    locations = np.atleast_2d(np.asarray(locations, dtype=np.intp))
    K = locations.shape[0]
    p = np.repeat(net.p_kw[:, None], K, axis=1)
    q = np.repeat(net.q_kvar[:, None], K, axis=1)
    cols = np.repeat(np.arange(K), locations.shape[1])
    np.add.at(p, (locations.ravel() - 1, cols), evci_kw)
    return batch_objectives(solve_batch(net, p, q, lf), lf)


class MemoEvaluator:
    """Caches objective pairs per sorted placement tuple."""

    def __init__(self, net: FeederNetwork, evci_kw: float, lf: LoadFlowConfig):
        self.net = net
        self.evci_kw = evci_kw
        self.lf = lf
        self.cache: dict[tuple[int, ...], tuple[float, float]] = {}
        self.load_flows = 0

    def __call__(self, placements: list[tuple[int, ...]]) -> list[tuple[float, float]]:
        todo = []
        for pl in placements:
            if pl not in self.cache and pl not in todo:
                todo.append(pl)
        if todo:
            obj = evaluate_locations(self.net, self.evci_kw, np.array(todo), self.lf)
            self.load_flows += len(todo)
            for pl, f in zip(todo, obj):
                self.cache[pl] = (float(f[0]), float(f[1]))
        return [self.cache[pl] for pl in placements]
