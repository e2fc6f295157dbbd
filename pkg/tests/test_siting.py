from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evciplan.loadflow import LoadFlowConfig, objectives, solve
from evciplan.network import Placement, apply_placement
from evciplan.siting import (
    BudgetExceeded,
    ObjectivePair,
    ParetoArchive,
    PsoConfig,
    archive_insert,
    best_compromise,
    dominates,
    enumerate_all,
    evaluate_locations,
    pareto_front_indices,
    repair,
    run_mopso,
)
from evciplan.siting.evaluate import MemoEvaluator

SMALL = PsoConfig(swarm_size=12, max_iter=15, k_repeat=15, max_run=2, seed=3)


@settings(max_examples=300, deadline=None)
@given(st.lists(st.floats(-50, 80), min_size=1, max_size=8), st.integers(9, 40))
def test_repair_gives_distinct_valid_buses(pos, n_bus):
    out = repair(np.array(pos), n_bus)
    assert len(set(out.tolist())) == len(pos)
    assert out.min() >= 2 and out.max() <= n_bus


def test_repair_prefers_lower_neighbour():
    assert repair(np.array([5.0, 5.2]), 33).tolist() == [5, 4]
    assert repair(np.array([2.0, 2.0]), 33).tolist() == [2, 3]
    assert repair(np.array([-3.0, 40.0]), 33).tolist() == [2, 33]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), min_size=1, max_size=60))
def test_front_indices_match_brute_force(points):
    F = np.array(points, dtype=float)
    got = set(pareto_front_indices(F).tolist())
    want = {i for i in range(len(F)) if not any(dominates(F[j], F[i]) for j in range(len(F)))}
    assert got == want


def test_front_ignores_infinite_rows():
    F = np.array([[1.0, 2.0], [np.inf, np.inf], [2.0, 1.0]])
    assert pareto_front_indices(F).tolist() == [0, 2]


def test_evaluate_matches_single_solve(net):
    locs = np.array([[2, 9, 30], [5, 6, 7]])
    F = evaluate_locations(net, 400.0, locs)
    for row, f in zip(locs, F):
        sol = solve(apply_placement(net, Placement(tuple(row), 400.0)))
        assert tuple(f) == objectives(sol)


def test_memo_counts_unique(net):
    ev = MemoEvaluator(net, 1000.0, LoadFlowConfig())
    ev([(2, 3), (2, 3), (4, 5)])
    ev([(2, 3)])
    assert ev.load_flows == 2


def test_enumerate_single(net):
    rep = enumerate_all(net, 1000.0, 1)
    assert rep.n_evaluations == 32
    assert rep.combos[:, 0].tolist() == list(range(2, 34))


def test_enumerate_pairs_against_brute(net):
    rep = enumerate_all(net, 500.0, 2)
    assert rep.n_evaluations == 496
    arch = ParetoArchive(capacity=1000)
    for c in combinations(range(2, 34), 2):
        f = objectives(solve(apply_placement(net, Placement(c, 500.0))))
        arch = archive_insert(arch, (c, f))
    assert set(map(tuple, rep.combos[rep.front].tolist())) == set(arch.solutions)
    assert rep.best_locations == best_compromise(arch)[0]


def test_enumerate_workers_agree(net):
    a = enumerate_all(net, 800.0, 2, workers=1)
    b = enumerate_all(net, 800.0, 2, workers=2)
    assert np.array_equal(a.objectives, b.objectives)


def test_budget(net):
    with pytest.raises(BudgetExceeded):
        enumerate_all(net, 1000.0, 6)


def test_mopso_deterministic(net):
    a = run_mopso(net, 1000.0, 3, SMALL)
    b = run_mopso(net, 1000.0, 3, SMALL)
    assert a.to_json() == b.to_json()


def test_mopso_result_is_evaluated_placement(net):
    rep = run_mopso(net, 1000.0, 3, SMALL)
    f = evaluate_locations(net, 1000.0, np.array([rep.locations]))[0]
    assert tuple(f) == tuple(rep.objectives)
    assert len(rep.runs) <= SMALL.max_run
    for run in rep.runs:
        objs = [f for _, f in run.front]
        assert not any(dominates(x, y) for x in objs for y in objs)


def test_mopso_zero_evci(net):
    rep = run_mopso(net, 1000.0, 0, SMALL)
    assert rep.locations == ()
    assert rep.objectives[0] == pytest.approx(202.67705478544636)


def test_mopso_single_evci_finds_oracle(net):
    oracle = enumerate_all(net, 1000.0, 1)
    rep = run_mopso(net, 1000.0, 1, SMALL)
    F = oracle.objectives
    assert not np.any(np.all(F <= rep.objectives, axis=1) & np.any(F < rep.objectives, axis=1))


def test_literal_preset():
    lit = PsoConfig.literal(seed=4)
    assert (lit.inertia, lit.turbulence, lit.absorb_walls, lit.k_repeat) == (1.0, 0.0, False, 10)
    assert lit.seed == 4


def test_config_validation():
    with pytest.raises(ValueError):
        PsoConfig(swarm_size=0)
    with pytest.raises(ValueError):
        PsoConfig(turbulence=1.5)


def test_objective_pair_feasible():
    assert ObjectivePair(1.0, 2.0).feasible
    assert not ObjectivePair(np.inf, 2.0).feasible
