import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evciplan.siting.archive import (
    ObjectivePair,
    ParetoArchive,
    archive_insert,
    best_compromise,
    crowding_distance,
    crowding_truncate,
    dominates,
    fuzzy_memberships,
    sigma_leader,
    sigma_value,
)


def arch_of(points, capacity=50):
    return ParetoArchive(tuple((i, ObjectivePair(*p)) for i, p in enumerate(points)), capacity)


def test_dominates():
    assert dominates((1, 2), (2, 2))
    assert not dominates((1, 2), (1, 2))
    assert not dominates((1, 3), (2, 2))
    assert not dominates((2, 2), (1, 2))


def test_insert_rules():
    a = ParetoArchive(capacity=5)
    a = a.insert("a", (2, 2))
    a = a.insert("b", (3, 3))          # dominated, rejected
    assert a.solutions == ["a"]
    a = a.insert("c", (1, 3))
    a = a.insert("d", (1, 1))          # dominates both
    assert a.solutions == ["d"]
    a = a.insert("d", (0, 0))          # same key, ignored
    assert a.objectives.tolist() == [[1, 1]]
    a = a.insert("e", (math.inf, math.inf))
    assert len(a) == 1


def test_crowding_hand_example():
    # f1 = 0, .25, .5, 1 with f2 = 1 - f1; interior distances 1.0 and 1.5
    pts = [(0, 1), (0.25, 0.75), (0.5, 0.5), (1.0, 0.0)]
    d = crowding_distance(np.array(pts))
    assert math.isinf(d[0]) and math.isinf(d[3])
    assert d[1] == pytest.approx(1.0)
    assert d[2] == pytest.approx(1.5)
    kept = crowding_truncate(arch_of(pts, capacity=3))
    assert kept.objectives.tolist() == [[0, 1], [0.5, 0.5], [1.0, 0.0]]


def test_crowding_three_into_two_keeps_boundaries():
    kept = crowding_truncate(arch_of([(0, 1), (0.5, 0.5), (1, 0)], capacity=2))
    assert kept.objectives.tolist() == [[0, 1], [1, 0]]


def test_truncate_identity_under_capacity():
    a = arch_of([(0, 1), (1, 0)], capacity=4)
    assert crowding_truncate(a) is a


def test_sigma_values():
    assert sigma_value((1, 0)) == 1.0
    assert sigma_value((0, 1)) == -1.0
    assert sigma_value((1, 1)) == 0.0
    assert sigma_value((0, 0)) == 0.0


def test_sigma_leader_picks_matching_end():
    a = arch_of([(0, 1), (0.5, 0.5), (1, 0)])
    assert sigma_leader((2.0, 0.0), a)[0] == 2        # f1-heavy particle -> f1-heavy member
    assert sigma_leader((0.0, 2.0), a)[0] == 0
    assert sigma_leader((math.inf, math.inf), a)[0] == 1


def test_best_compromise_middle():
    a = arch_of([(0, 1), (0.4, 0.4), (1, 0)])
    sol, f, mu = best_compromise(a)
    assert sol == 1
    assert mu == pytest.approx(1.2 / 3.2)


def test_best_compromise_two_member_tie_goes_to_lower_loss():
    a = arch_of([(5, 1), (3, 2)])
    assert best_compromise(a)[0] == 1


def test_memberships_constant_objective():
    mu = fuzzy_memberships(np.array([[1.0, 2.0], [1.0, 3.0]]))
    assert mu[:, 0].tolist() == [1.0, 1.0]
    assert mu[:, 1].tolist() == [1.0, 0.0]


def brute_front(points):
    return {i for i, p in enumerate(points) if not any(dominates(q, p) for q in points)}


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)), min_size=1, max_size=40))
def test_unbounded_archive_equals_brute_front(points):
    a = ParetoArchive(capacity=1000)
    for i, p in enumerate(points):
        a = archive_insert(a, (i, p))
    objs = {tuple(f) for _, f in a}
    expect = {tuple(map(float, points[i])) for i in brute_front(points)}
    assert objs == expect


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(0, 1), st.floats(0, 1)), min_size=3, max_size=30, unique=True),
       st.integers(2, 10))
def test_truncation_keeps_extremes(points, cap):
    a = ParetoArchive(capacity=1000)
    for i, p in enumerate(points):
        a = archive_insert(a, (i, p))
    F = a.objectives
    lo1 = a.members[int(np.argmin(F[:, 0]))][0]
    lo2 = a.members[int(np.argmin(F[:, 1]))][0]
    kept = crowding_truncate(ParetoArchive(a.members, cap))
    assert len(kept) == min(cap, len(a))
    assert {lo1, lo2} <= set(kept.solutions)
