import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evciplan.loadflow import LoadFlowConfig, batch_objectives, objectives, slack_power_pu, solve, solve_batch
from evciplan.network import Branch, Bus, FeederNetwork, Placement, apply_placement

from test_network import chain


def two_bus(p_kw, q_kvar, r, x):
    return FeederNetwork(12.66, 100.0, (Bus(1, 0, 0), Bus(2, p_kw, q_kvar)), (Branch(1, 1, 2, r, x),))


def two_bus_exact(p_kw, q_kvar, r, x, base_kv=12.66, base_mva=100.0):
    """|V2| and loss from the quartic |V2|^4 + (2(PR+QX) - 1)|V2|^2 + |S|^2|Z|^2 = 0."""
    zb = base_kv ** 2 / base_mva
    P, Q = p_kw / 1000 / base_mva, q_kvar / 1000 / base_mva
    R, X = r / zb, x / zb
    b = 1 - 2 * (P * R + Q * X)
    v2sq = (b + math.sqrt(b * b - 4 * (P * P + Q * Q) * (R * R + X * X))) / 2
    loss_kw = (P * P + Q * Q) / v2sq * R * base_mva * 1000
    return math.sqrt(v2sq), loss_kw


@pytest.mark.parametrize("p,q,r,x", [(1000, 600, 0.5, 0.3), (3715, 2300, 1.2, 0.9), (10, 0, 0.01, 0.02)])
def test_two_bus_closed_form(p, q, r, x):
    sol = solve(two_bus(p, q, r, x), LoadFlowConfig(tol=1e-12))
    v2, loss = two_bus_exact(p, q, r, x)
    assert abs(sol.vmag[1] - v2) < 1e-8
    assert sol.total_loss_kw == pytest.approx(loss, rel=1e-8)


def test_base_case_frozen(net):
    sol = solve(net)
    assert sol.converged and not sol.collapsed
    assert sol.total_loss_kw == pytest.approx(202.67705478544636, rel=1e-9)
    assert sol.sq_volt_dev == pytest.approx(0.11709422255873739, rel=1e-9)
    assert sol.min_voltage[1] == 18
    assert sol.min_voltage[0] == pytest.approx(0.9130904965953165, abs=1e-9)
    assert sol.min_branch_loss[1] == 32


def test_power_balance(net):
    cfg = LoadFlowConfig()
    sol = solve(net, cfg)
    s_slack = slack_power_pu(sol, net)
    s_load = (net.p_kw.sum() + 1j * net.q_kvar.sum()) / 1000 / net.base_mva
    zb = net.z_base
    z = np.array([br.r + 1j * br.x for br in net.branches]) / zb
    s_loss = np.sum(np.abs(sol.i_branch) ** 2 * z)
    assert abs(s_slack - s_load - s_loss) <= 10 * cfg.tol


def test_uniform_chain_monotone():
    sol = solve(chain(12))
    assert np.all(np.diff(sol.vmag) < 0)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 100), min_size=2, max_size=25), st.floats(10, 300))
def test_uniform_tree_monotone(parents, load):
    # random tree: bus k+2 hangs off an earlier bus
    n = len(parents) + 1
    buses = [Bus(1, 0, 0)] + [Bus(i, load, load / 2) for i in range(2, n + 1)]
    branches = [Branch(k + 1, parents[k] % (k + 1) + 1, k + 2, 0.2, 0.1) for k in range(n - 1)]
    tree = FeederNetwork(12.66, 100.0, tuple(buses), tuple(branches))
    sol = solve(tree)
    vm = sol.vmag
    for b in range(2, n + 1):
        path = tree.path_to_root(b)
        assert all(vm[a - 1] <= vm[p - 1] + 1e-12 for a, p in zip(path, path[1:]))


def test_determinism(net):
    a, b = solve(net), solve(net)
    assert np.array_equal(a.v, b.v)
    assert a.total_loss_kw == b.total_loss_kw


def test_batch_columns_bit_identical(net):
    rng = np.random.default_rng(0)
    scale = rng.uniform(0.5, 1.5, size=(net.n_bus, 7))
    p = net.p_kw[:, None] * scale
    q = net.q_kvar[:, None] * scale
    batch = solve_batch(net, p, q)
    obj = batch_objectives(batch)
    for k in range(7):
        single = solve(net.with_loads(p[:, k], q[:, k]))
        assert np.array_equal(batch.v[:, k], single.v)
        assert obj[k, 0] == single.total_loss_kw
        assert obj[k, 1] == single.sq_volt_dev
        assert objectives(single) == (single.total_loss_kw, single.sq_volt_dev)


def test_overload_is_infeasible(net):
    # the 8,15,16,17,18 placement at 1000 kW each does not converge on this data
    placed = apply_placement(net, Placement((8, 15, 16, 17, 18), 1000.0))
    sol = solve(placed)
    assert not (sol.converged and not sol.collapsed)
    obj = batch_objectives(solve_batch(placed, placed.p_kw, placed.q_kvar))
    assert np.all(np.isinf(obj))


def test_no_load_flat_voltage():
    n = chain(5, p=0.0, q=0.0)
    sol = solve(n)
    assert np.allclose(sol.vmag, 1.0)
    assert sol.total_loss_kw == 0.0
