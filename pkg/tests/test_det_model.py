from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secslot.conic import InfeasibleError
from secslot.det_model import (Policy, binding_slots, build_costs, integer_recommendations, load_policy_csv,
                               policy_objective, recommendation_cost, solve_deterministic, write_policy_csv)
from secslot.queueing import fcfs_evaluate
from secslot.timegrid import Flight, Schedule, TimeGrid

from conftest import small_schedule
from oracles import basis_count, brute_force_deterministic

GRID = TimeGrid(num_slots=40)


@pytest.mark.parametrize("lead, cost", [(4, 16), (1, 1), (8, 64), (3, 3), (5, 25), (16, 256)])
def test_cost_branches(lead, cost):
    assert recommendation_cost(lead, 4) == cost


def test_cost_matrix_defined_on_windows_only():
    s = Schedule(GRID, (Flight("A", 30, 100),), 800)
    c = build_costs(s, 4).c
    assert np.isnan(c[0, 30]) and np.isnan(c[0, 13])
    assert c[0, 29] == 1 and c[0, 26] == 16 and c[0, 14] == 256
    with pytest.raises(ValueError):
        build_costs(s, 0)


def test_single_flight_takes_last_slot():
    s = Schedule(GRID, (Flight("A", 30, 100),), 800)
    pol = solve_deterministic(s, build_costs(s, 4))
    assert pol.objective == pytest.approx(100)
    assert pol.x[0, 29] == pytest.approx(1)


def test_two_flights_share_departure():
    s = Schedule(GRID, (Flight("A", 30, 500), Flight("B", 30, 500)), 800)
    pol = solve_deterministic(s, build_costs(s, 4))
    assert pol.objective == pytest.approx(800 * 1 + 200 * 2)
    d = s.seats @ pol.x
    assert d[29] == pytest.approx(800) and d[28] == pytest.approx(200)


def test_zero_capacity_infeasible():
    s = Schedule(GRID, (Flight("A", 30, 100),), 0)
    with pytest.raises(InfeasibleError) as exc:
        solve_deterministic(s, build_costs(s, 4))
    assert set(exc.value.binding_slots) <= set(range(14, 30))
    assert exc.value.binding_slots


def test_overloaded_interval_reported():
    flights = tuple(Flight(f"F{k}", 30, 900) for k in range(3))
    s = Schedule(GRID, flights, 100)
    with pytest.raises(InfeasibleError) as exc:
        solve_deterministic(s, build_costs(s, 4))
    assert tuple(exc.value.binding_slots) == tuple(range(14, 30))


def test_policy_invariants(reference):
    pol = reference.det
    s = reference.schedule
    assert np.all(pol.x >= -1e-12)
    np.testing.assert_allclose(pol.x.sum(axis=1), 1, atol=1e-8)
    assert not np.any(pol.x[~s.window_mask()])
    assert np.all(s.seats @ pol.x <= s.capacity * (1 + 1e-6))
    assert pol.objective == pytest.approx(policy_objective(pol, s, reference.costs), rel=1e-9)


def test_mostly_discrete(reference):
    # an LP vertex splits at most one flight per binding capacity row
    pol = reference.det
    assert np.mean(pol.x.max(axis=1) > 1 - 1e-6) > 0.5


def test_full_compliance_replay_has_no_queue(reference):
    s = reference.schedule
    tr = fcfs_evaluate(s.seats @ reference.det.x, s.capacity, s)
    assert tr.queue_len.max() <= 1e-6 * s.capacity.max()


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_permutation_invariance(seed):
    rng = np.random.default_rng(seed)
    s = small_schedule(rng, 8)
    flipped = Schedule(s.grid, tuple(reversed(s.flights)), s.capacity)
    renamed = Schedule(s.grid, tuple(Flight(f"Z{99 - k}", f.dep, f.seats) for k, f in enumerate(s.flights)),
                       s.capacity)
    objs = []
    for inst in (s, flipped, renamed):
        objs.append(solve_deterministic(inst, build_costs(inst, 4)).objective)
    assert objs[1] == pytest.approx(objs[0], rel=1e-9)
    assert objs[2] == pytest.approx(objs[0], rel=1e-9)


def tiny_instances(n, seed=0, limit=250_000):
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        N = int(rng.integers(1, 4))
        flights = []
        for k in range(N):
            w = int(rng.integers(1, 7))
            flights.append(Flight(f"T{k}", int(rng.integers(8, 12)), int(rng.integers(50, 500)), w))
        cap = rng.integers(100, 600, size=14).astype(float)
        s = Schedule(TimeGrid(num_slots=14), tuple(flights), cap)
        if basis_count(s) <= limit:
            out.append(s)
    return out


@pytest.mark.parametrize("s", tiny_instances(12, seed=3), ids=lambda s: f"N{len(s)}")
def test_matches_brute_force(s):
    costs = build_costs(s, 4)
    oracle = brute_force_deterministic(s, costs)
    if np.isinf(oracle):
        with pytest.raises(InfeasibleError):
            solve_deterministic(s, costs)
    else:
        assert solve_deterministic(s, costs).objective == pytest.approx(oracle, rel=1e-6, abs=1e-9)


def test_binding_slots_falls_back_to_pressure():
    s = Schedule(GRID, (Flight("A", 30, 100),), 800)
    assert len(binding_slots(s, top=3)) == 3


def test_integer_recommendations(reference):
    counts = integer_recommendations(reference.det, reference.schedule)
    np.testing.assert_array_equal(counts.sum(axis=1), reference.schedule.seats)
    assert np.all(np.abs(counts - reference.det.x * reference.schedule.seats[:, None]) < 1 + 1e-9)


def test_integerization_largest_remainder():
    s = Schedule(GRID, (Flight("A", 30, 10),), 800)
    x = np.zeros((1, 40))
    x[0, 27:30] = [0.26, 0.37, 0.37]
    counts = integer_recommendations(Policy(x, ("A",), "test"), s)
    assert counts[0, 27:30].tolist() == [2, 4, 4]


def test_policy_csv_roundtrip(tmp_path, reference):
    s = reference.schedule
    write_policy_csv(reference.det, s, tmp_path / "p.csv")
    back = load_policy_csv(tmp_path / "p.csv", s)
    np.testing.assert_allclose(back.x, np.where(reference.det.x >= 1e-9, reference.det.x, 0), atol=0)
    first = (tmp_path / "p.csv").read_text().splitlines()[0]
    assert first == "flight_id,slot,fraction"


def test_policy_csv_validation(tmp_path):
    s = Schedule(GRID, (Flight("A", 30, 10),), 800)
    p = tmp_path / "p.csv"
    p.write_text("flight_id,slot,fraction\nA,29,0.5\n")
    with pytest.raises(ValueError, match="sum to 1"):
        load_policy_csv(p, s)
    p.write_text("flight_id,slot,fraction\nA,30,1.0\n")
    with pytest.raises(ValueError, match="outside window"):
        load_policy_csv(p, s)
