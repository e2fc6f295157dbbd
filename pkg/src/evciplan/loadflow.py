"""Forward-backward sweep load flow for radial feeders.

Loads are constant-power. The sweep runs in per-unit on the feeder's
``base_kv``/``base_mva``; reported losses are converted back to kW.

:func:`solve_batch` evaluates many load scenarios on one topology at once,
one scenario per column. Each column stops updating as soon as it has
converged, so a column of a batch solve is bit-identical to solving that
scenario alone.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .network import FeederNetwork

COLLAPSE_PU = 0.5


def _seqsum(a: np.ndarray) -> np.ndarray:
    """Sum over axis 0 in a fixed left-to-right order.

    numpy's pairwise reduction changes with array shape; objective values
    must not depend on how many scenarios share a batch.
    """
    out = np.array(a[0], dtype=float, copy=True)
    for row in a[1:]:
        out += row
    return out


@dataclass(frozen=True)
class LoadFlowConfig:
    v_slack: float = 1.0
    v_threshold: float = 1.0
    tol: float = 1e-6
    max_iter: int = 100

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass(frozen=True)
class LoadFlowSolution:
    v: np.ndarray               # complex bus voltages, p.u., index 0 = bus 1
    i_branch: np.ndarray        # complex branch currents, p.u., branch order
    branch_loss_kw: np.ndarray
    total_loss_kw: float
    sq_volt_dev: float
    iterations: int
    converged: bool
    collapsed: bool
    base_mva: float

    @property
    def vmag(self) -> np.ndarray:
        return np.abs(self.v)

    @property
    def min_voltage(self) -> tuple[float, int]:
        """(|v|, bus id) at the lowest-voltage bus."""
        k = int(np.argmin(self.vmag))
        return float(self.vmag[k]), k + 1

    @property
    def min_branch_loss(self) -> tuple[float, int]:
        """(kW, branch id) at the least-lossy branch."""
        k = int(np.argmin(self.branch_loss_kw))
        return float(self.branch_loss_kw[k]), k + 1

    def to_dict(self) -> dict:
        vmin, vbus = self.min_voltage
        lmin, lbr = self.min_branch_loss
        return {
            "converged": self.converged,
            "iterations": self.iterations,
            "total_loss_kw": self.total_loss_kw,
            "sq_volt_dev": self.sq_volt_dev,
            "min_voltage_pu": vmin,
            "min_voltage_bus": vbus,
            "min_branch_loss_kw": lmin,
            "min_branch_loss_branch": lbr,
            "voltage_pu": [float(x) for x in self.vmag],
            "branch_loss_kw": [float(x) for x in self.branch_loss_kw],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


@dataclass(frozen=True)
class BatchSolution:
    """Column-stacked results of :func:`solve_batch` (shape ``(n, K)``)."""

    v: np.ndarray
    i_branch: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    collapsed: np.ndarray
    base_mva: float
    r_pu: np.ndarray

    @property
    def branch_loss_kw(self) -> np.ndarray:
        return np.abs(self.i_branch) ** 2 * self.r_pu[:, None] * self.base_mva * 1000.0

    def column(self, k: int, cfg: LoadFlowConfig) -> LoadFlowSolution:
        v = self.v[:, k].copy()
        loss = self.branch_loss_kw[:, k].copy()
        return LoadFlowSolution(
            v=v,
            i_branch=self.i_branch[:, k].copy(),
            branch_loss_kw=loss,
            total_loss_kw=float(_seqsum(loss)),
            sq_volt_dev=float(_seqsum((cfg.v_threshold - np.abs(v[1:])) ** 2)),
            iterations=int(self.iterations[k]),
            converged=bool(self.converged[k]),
            collapsed=bool(self.collapsed[k]),
            base_mva=self.base_mva,
        )


def _branch_z_pu(net: FeederNetwork):
    zb = net.z_base
    r = np.array([br.r for br in net.branches]) / zb
    x = np.array([br.x for br in net.branches]) / zb
    return r, x


def solve_batch(net: FeederNetwork, p_kw: np.ndarray, q_kvar: np.ndarray,
                cfg: LoadFlowConfig = LoadFlowConfig()) -> BatchSolution:
    """Run the sweep on ``K`` load scenarios, ``p_kw``/``q_kvar`` of shape ``(n_bus, K)``."""
    p_kw = np.asarray(p_kw, dtype=float)
    q_kvar = np.asarray(q_kvar, dtype=float)
    if p_kw.ndim == 1:
        p_kw = p_kw[:, None]
    if q_kvar.ndim == 1:
        q_kvar = np.broadcast_to(q_kvar[:, None], p_kw.shape)
    n, K = p_kw.shape
    if n != net.n_bus or q_kvar.shape != p_kw.shape:
        raise ValueError("load matrices must be (n_bus, K)")

    s_load = (p_kw + 1j * q_kvar) / (1000.0 * net.base_mva)
    r, x = _branch_z_pu(net)
    order = net.order
    parent = net.parent
    pbranch = net.parent_branch
    downstream = order[1:]            # non-root buses, parents first
    upstream = downstream[::-1]       # leaves first
    z_of_bus = np.zeros(n, dtype=complex)
    z_of_bus[downstream] = r[pbranch[downstream]] + 1j * x[pbranch[downstream]]

    v = np.full((n, K), complex(cfg.v_slack))
    i_bus = np.zeros((n, K), dtype=complex)    # current into each bus from its parent
    iterations = np.zeros(K, dtype=np.intp)
    converged = np.zeros(K, dtype=bool)
    active = np.arange(K)

    for it in range(1, cfg.max_iter + 1):
        va = v[:, active]
        sa = s_load[:, active]
        # backward sweep: load currents accumulated from the leaves
        acc = np.conj(sa / va)
        for b in upstream:
            acc[parent[b]] += acc[b]
        # forward sweep: voltage drops from the slack bus outward
        vn = np.empty_like(va)
        vn[0] = cfg.v_slack
        for b in downstream:
            vn[b] = vn[parent[b]] - z_of_bus[b] * acc[b]
        with np.errstate(invalid="ignore"):
            err = np.max(np.abs(vn - va), axis=0)
        v[:, active] = vn
        i_bus[:, active] = acc
        iterations[active] = it
        done = err < cfg.tol
        converged[active[done]] = True
        active = active[~(done | ~np.isfinite(err))]
        if active.size == 0:
            break

    i_branch = np.zeros((n - 1, K), dtype=complex)
    i_branch[pbranch[downstream]] = i_bus[downstream]
    vmag = np.abs(v)
    collapsed = ~np.all(vmag >= COLLAPSE_PU, axis=0)
    return BatchSolution(v, i_branch, iterations, converged, collapsed, net.base_mva, r)


def solve(net: FeederNetwork, cfg: LoadFlowConfig = LoadFlowConfig()) -> LoadFlowSolution:
    """Solve the base loads of ``net``."""
    batch = solve_batch(net, net.p_kw[:, None], net.q_kvar[:, None], cfg)
    return batch.column(0, cfg)


def objectives(sol: LoadFlowSolution, cfg: LoadFlowConfig = LoadFlowConfig()) -> tuple[float, float]:
    """(total loss in kW, squared voltage deviation over buses 2..N)."""
    vm = np.abs(sol.v[1:])
    return float(_seqsum(sol.branch_loss_kw)), float(_seqsum((cfg.v_threshold - vm) ** 2))


def batch_objectives(batch: BatchSolution, cfg: LoadFlowConfig = LoadFlowConfig(),
                     infeasible_inf: bool = True) -> np.ndarray:
    """Objective pairs for every column, shape ``(K, 2)``.

    Non-converged or collapsed columns get ``+inf`` in both objectives
    when ``infeasible_inf`` is set.
    """
    loss = _seqsum(batch.branch_loss_kw)
    dev = _seqsum((cfg.v_threshold - np.abs(batch.v[1:])) ** 2)
    out = np.stack([loss, dev], axis=1)
    if infeasible_inf:
        bad = ~batch.converged | batch.collapsed
        out[bad] = np.inf
    return out


def slack_power_pu(sol: LoadFlowSolution, net: FeederNetwork) -> complex:
    """Complex power injected at the substation."""
    feeders = [k for k, br in enumerate(net.branches) if 1 in (br.from_bus, br.to_bus)]
    return complex(sol.v[0] * np.conj(sol.i_branch[feeders].sum()))
