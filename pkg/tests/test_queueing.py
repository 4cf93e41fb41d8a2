from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from secslot.queueing import (ArrivalStream, QueueTrace, fcfs_evaluate, fcfs_evaluate_batch, missed_flight_check,
                              missed_passengers, total_time_savings, write_trace_csv)
from secslot.timegrid import Flight, Schedule, TimeGrid

GRID3 = TimeGrid(num_slots=3)
EMPTY3 = Schedule(GRID3, (), 800)


def reference_queue(counts, capacity):
    """Oracle: the point-queue recursion written out slot by slot in plain Python."""
    served, queue = [], 0.0
    for c, cap in zip(counts, capacity):
        load = queue + c
        out = min(load, cap)
        served.append(out)
        queue = load - out
    while queue > 1e-12:
        out = min(queue, capacity[-1])
        served.append(out)
        queue -= out
    return np.array(served)


def trace(a, d, q, grid=GRID3):
    return QueueTrace(grid, np.asarray(a, float), np.asarray(d, float), np.asarray(q, float))


def test_under_capacity():
    tr = fcfs_evaluate(ArrivalStream(np.array([10.0, 0, 0])), np.full(3, 800.0), EMPTY3)
    np.testing.assert_array_equal(tr.cum_arrivals, tr.cum_departures)
    assert tr.area() == 0


def test_overflow_carries_to_next_slot():
    tr = fcfs_evaluate(np.array([1000.0, 0, 0]), np.full(3, 800.0), EMPTY3)
    np.testing.assert_array_equal(np.diff(tr.cum_departures, prepend=0), [800, 200, 0])
    assert tr.queue_len[0] == 200


def test_all_zero_counts():
    s = Schedule(TimeGrid(num_slots=20), (Flight("A", 18, 50),), 800)
    tr = fcfs_evaluate(np.zeros(20), s.capacity, s)
    assert not tr.cum_arrivals.any() and not tr.cum_departures.any()
    assert tr.cum_flight_departures[-1] == 50 and tr.cum_flight_departures[17] == 0


def test_horizon_extends_until_drained():
    tr = fcfs_evaluate(np.array([0.0, 0, 2500]), np.full(3, 800.0), EMPTY3)
    assert len(tr) == 6
    assert tr.cum_departures[-1] == tr.cum_arrivals[-1] == 2500


def test_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch"):
        fcfs_evaluate(np.zeros(4), np.full(3, 800.0), EMPTY3)


def test_tts_identity():
    tr = fcfs_evaluate(np.array([1000.0, 300, 0]), np.full(3, 800.0), EMPTY3)
    assert total_time_savings(tr, tr) == 0


def test_tts_decomposes_areas():
    # 9,601 and 1,440 pax-hours as single 15-minute queues
    base = trace([9601 * 4, 9601 * 4, 9601 * 4], [0, 9601 * 4, 9601 * 4], [0, 0, 0])
    ctrl = trace([1440 * 4, 1440 * 4, 1440 * 4], [0, 1440 * 4, 1440 * 4], [0, 0, 0])
    assert total_time_savings(base, ctrl) == pytest.approx(8161)


def test_tts_one_slot_of_200():
    base = fcfs_evaluate(np.array([1000.0, 0, 0]), np.full(3, 800.0), EMPTY3)
    ctrl = fcfs_evaluate(np.array([800.0, 200, 0]), np.full(3, 800.0), EMPTY3)
    assert total_time_savings(base, ctrl) == pytest.approx(200 * 0.25)


def test_tts_grid_mismatch():
    other = trace([0, 0, 0], [0, 0, 0], [0, 0, 0], TimeGrid(slot_minutes=10, num_slots=3))
    with pytest.raises(ValueError, match="different grids"):
        total_time_savings(trace([0, 0, 0], [0, 0, 0], [0, 0, 0]), other)


def test_missed_flight_detected():
    rep = missed_flight_check(trace([0, 800, 1600], [0, 800, 1600], [900, 900, 900]))
    assert rep.missed and rep.first_slot == 0 and rep.worst_gap == 900


def test_no_missed_flight():
    rep = missed_flight_check(trace([900, 900, 900], [900, 900, 900], [0, 900, 900]))
    assert not rep.missed and rep.first_slot is None


def test_empty_schedule_never_misses():
    tr = fcfs_evaluate(np.array([5000.0, 0, 0]), np.full(3, 800.0), EMPTY3)
    assert not missed_flight_check(tr).missed


def test_missed_passenger_bounds():
    s = Schedule(TimeGrid(num_slots=20), (Flight("A", 17, 300), Flight("B", 19, 300)), 100)
    counts = np.zeros(20)
    counts[16], counts[18] = 300, 300
    flight = np.repeat([0, 1], 300)
    slot = np.repeat([16, 18], 300)
    tr = fcfs_evaluate(counts, s.capacity, s)
    certain, possible = missed_passengers(tr, ArrivalStream(counts, flight, slot), s)
    # A holds queue positions 1..300 of slot 16 and only positions <= 100 clear
    # before slot 17, so none of A is surely late but any of A may be.
    # B holds positions 301..600; even position 301 clears in slot 19 = B's departure.
    assert (certain, possible) == (300, 600)


def test_trace_csv(tmp_path):
    tr = fcfs_evaluate(np.array([1000.0, 0, 0]), np.full(3, 800.0), EMPTY3)
    write_trace_csv(tr, tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "slot,a,d,q,queue_len"
    assert lines[1] == "0,1000.0,800.0,0.0,200.0"


counts_st = st.lists(st.integers(0, 2000), min_size=1, max_size=30)


@settings(max_examples=80, deadline=None)
@given(counts=counts_st, data=st.data())
def test_matches_reference_recursion(counts, data):
    T = len(counts)
    cap = np.array(data.draw(st.lists(st.integers(1, 1500), min_size=T, max_size=T)), float)
    s = Schedule(TimeGrid(num_slots=T), (), cap)
    tr = fcfs_evaluate(np.array(counts, float), cap, s)
    np.testing.assert_allclose(np.diff(tr.cum_departures, prepend=0), reference_queue(counts, cap))


@settings(max_examples=80, deadline=None)
@given(counts=counts_st, data=st.data())
def test_conservation_and_work_conservation(counts, data):
    T = len(counts)
    cap = np.array(data.draw(st.lists(st.integers(0, 1500), min_size=T, max_size=T)), float)
    cap[-1] = max(cap[-1], 1.0)
    s = Schedule(TimeGrid(num_slots=T), (), cap)
    tr = fcfs_evaluate(np.array(counts, float), cap, s)
    served = np.diff(tr.cum_departures, prepend=0)
    arrived = np.diff(tr.cum_arrivals, prepend=0)
    ext_cap = np.concatenate([cap, np.full(len(tr) - T, cap[-1])])
    assert tr.cum_departures[-1] == pytest.approx(sum(counts))
    assert np.all(tr.cum_departures <= tr.cum_arrivals + 1e-9)
    assert np.all(served <= ext_cap + 1e-9)
    backlog = np.concatenate([[0.0], tr.queue_len[:-1]]) + arrived
    saturated = backlog >= ext_cap
    np.testing.assert_allclose(served[saturated], ext_cap[saturated])


@settings(max_examples=60, deadline=None)
@given(a=counts_st, data=st.data())
def test_tts_antisymmetric(a, data):
    T = len(a)
    b = data.draw(st.lists(st.integers(0, 2000), min_size=T, max_size=T))
    s = Schedule(TimeGrid(num_slots=T), (), 700)
    ta = fcfs_evaluate(np.array(a, float), s.capacity, s)
    tb = fcfs_evaluate(np.array(b, float), s.capacity, s)
    assert total_time_savings(ta, tb) == pytest.approx(-total_time_savings(tb, ta))


@settings(max_examples=60, deadline=None)
@given(counts=counts_st, data=st.data())
def test_more_capacity_never_hurts(counts, data):
    T = len(counts)
    cap = np.array(data.draw(st.lists(st.integers(1, 1500), min_size=T, max_size=T)), float)
    slot = data.draw(st.integers(0, T - 1))
    bump = data.draw(st.integers(1, 1000))
    s = Schedule(TimeGrid(num_slots=T), (), cap)
    base = fcfs_evaluate(np.full(T, 900.0), cap, s)
    raised = cap.copy()
    raised[slot] += bump
    low = fcfs_evaluate(np.array(counts, float), cap, s)
    high = fcfs_evaluate(np.array(counts, float), raised, s.with_capacity(raised))
    assert total_time_savings(base, high) >= total_time_savings(base, low) - 1e-9


def test_batch_matches_single():
    rng = np.random.default_rng(0)
    s = Schedule(TimeGrid(num_slots=12), (), 500)
    counts = rng.integers(0, 1200, size=(5, 12)).astype(float)
    batch = fcfs_evaluate_batch(counts, s.capacity, s)
    for r in range(5):
        single = fcfs_evaluate(counts[r], s.capacity, s)
        n = len(batch[r])
        np.testing.assert_array_equal(single.padded(n).cum_departures, batch[r].cum_departures)
        assert single.area() == pytest.approx(batch[r].area())
