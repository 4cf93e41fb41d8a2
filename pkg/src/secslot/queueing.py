"""FCFS point-queue evaluation: cumulative curves, time savings, missed flights."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import kernels
from .timegrid import Schedule, TimeGrid

# hard stop for horizon extension; a queue that has not drained by then is a bug
_MAX_EXTENSION = 100_000


@dataclass(frozen=True, eq=False)
class ArrivalStream:
    """Per-slot arrival counts, with optional per-passenger (flight index, slot) records."""

    counts: np.ndarray
    flight_index: np.ndarray | None = None
    slot: np.ndarray | None = None

    @property
    def total(self) -> float:
        return float(self.counts.sum())


@dataclass(frozen=True, eq=False)
class QueueTrace:
    grid: TimeGrid
    cum_arrivals: np.ndarray
    cum_departures: np.ndarray
    cum_flight_departures: np.ndarray

    @property
    def queue_len(self) -> np.ndarray:
        return self.cum_arrivals - self.cum_departures

    def __len__(self):
        return self.cum_arrivals.size

    def area(self) -> float:
        """Queue area in passenger-hours."""
        return float(self.queue_len.sum() * self.grid.dt_hours)

    def padded(self, length: int) -> "QueueTrace":
        if length <= len(self):
            return self

        def pad(v):
            return np.concatenate([v, np.full(length - v.size, v[-1] if v.size else 0.0)])

        return QueueTrace(self.grid, pad(self.cum_arrivals), pad(self.cum_departures),
                          pad(self.cum_flight_departures))


def _tail_capacity(capacity: np.ndarray) -> float:
    positive = capacity[capacity > 0]
    if positive.size == 0:
        raise ValueError("capacity is zero everywhere; queue can never drain")
    return float(positive[-1])


def _extended_capacity(capacity: np.ndarray, length: int) -> np.ndarray:
    if length <= capacity.size:
        return capacity[:length]
    return np.concatenate([capacity, np.full(length - capacity.size, _tail_capacity(capacity))])


def _horizon(counts: np.ndarray, capacity: np.ndarray) -> int:
    """Slots needed for every arrival to clear (grid length at minimum)."""
    T = counts.shape[-1]
    served = kernels.point_queue(counts.reshape(-1, T), capacity)
    backlog = float((counts.reshape(-1, T).sum(axis=1) - served.sum(axis=1)).max(initial=0.0))
    if backlog <= 1e-9:
        return T
    extra = int(np.ceil(backlog / _tail_capacity(capacity) - 1e-12))
    if extra > _MAX_EXTENSION:
        raise ValueError("queue does not drain within the extension limit")
    return T + extra


def flight_departure_curve(schedule: Schedule, length: int) -> np.ndarray:
    q = np.zeros(length)
    for f in schedule.flights:
        q[f.dep] += f.seats
    return np.cumsum(q)


def fcfs_evaluate(arrivals, capacity, schedule: Schedule) -> QueueTrace:
    """Run the point queue over ``arrivals`` (an ArrivalStream or count vector).

    Up to ``capacity[t]`` passengers clear per slot in arrival order. The
    horizon extends past the grid, at the last positive capacity, until the
    queue has drained.
    """
    counts = arrivals.counts if isinstance(arrivals, ArrivalStream) else arrivals
    counts = np.asarray(counts, dtype=float)
    capacity = np.asarray(capacity, dtype=float)
    T = schedule.grid.num_slots
    if counts.shape != (T,) or capacity.shape != (T,):
        raise ValueError(
            f"length mismatch: counts {counts.shape}, capacity {capacity.shape}, grid {T}")
    length = _horizon(counts, capacity) if counts.sum() > 0 else T
    c = np.concatenate([counts, np.zeros(length - T)])
    cap = _extended_capacity(capacity, length)
    served = kernels.point_queue(c[None, :], cap)[0]
    return QueueTrace(schedule.grid, np.cumsum(c), np.cumsum(served),
                      flight_departure_curve(schedule, length))


def fcfs_evaluate_batch(counts: np.ndarray, capacity, schedule: Schedule) -> list[QueueTrace]:
    """Evaluate R replications (rows of ``counts``) with one kernel call."""
    counts = np.atleast_2d(np.asarray(counts, dtype=float))
    capacity = np.asarray(capacity, dtype=float)
    T = schedule.grid.num_slots
    if counts.shape[1] != T or capacity.shape != (T,):
        raise ValueError("length mismatch between counts, capacity and grid")
    length = _horizon(counts, capacity) if counts.sum() > 0 else T
    c = np.concatenate([counts, np.zeros((counts.shape[0], length - T))], axis=1)
    cap = _extended_capacity(capacity, length)
    served = kernels.point_queue(c, cap)
    q = flight_departure_curve(schedule, length)
    a = np.cumsum(c, axis=1)
    d = np.cumsum(served, axis=1)
    return [QueueTrace(schedule.grid, a[r], d[r], q) for r in range(counts.shape[0])]


def total_time_savings(baseline: QueueTrace, controlled: QueueTrace, grid: TimeGrid | None = None) -> float:
    """Queue-area reduction (passenger-hours) of ``controlled`` relative to ``baseline``."""
    grid = grid or baseline.grid
    if baseline.grid.slot_minutes != grid.slot_minutes or controlled.grid.slot_minutes != grid.slot_minutes:
        raise ValueError("traces are on different grids")
    n = max(len(baseline), len(controlled))
    b, c = baseline.padded(n), controlled.padded(n)
    return float((b.queue_len.sum() - c.queue_len.sum()) * grid.dt_hours)


@dataclass(frozen=True)
class MissedFlightReport:
    missed: bool
    first_slot: int | None
    worst_gap: float  # max over slots of q(t) - d(t), clipped at zero


def missed_flight_check(trace: QueueTrace) -> MissedFlightReport:
    """Flag any slot where departed-flight seats exceed passengers through security."""
    gap = trace.cum_flight_departures - trace.cum_departures
    bad = np.flatnonzero(gap > 1e-9)
    if bad.size == 0:
        return MissedFlightReport(False, None, 0.0)
    return MissedFlightReport(True, int(bad[0]), float(gap.max()))


def missed_passengers(trace: QueueTrace, stream: ArrivalStream, schedule: Schedule) -> tuple[int, int]:
    """Bounds on passengers who clear security after their flight's departure slot begins.

    Within-slot order is unresolved, so a passenger arriving in slot t may sit
    anywhere in positions (a(t-1), a(t)]. Returns (certain, possible): those
    late even at the front of their slot, and those late at the back.
    """
    if stream.flight_index is None:
        raise ValueError("stream has no per-passenger records")
    a, d = trace.cum_arrivals, trace.cum_departures
    prev = np.concatenate([[0.0], a[:-1]])
    deps = schedule.deps[stream.flight_index]
    slot = stream.slot
    front = np.searchsorted(d, prev[slot] + 1 - 1e-9, side="left")
    back = np.searchsorted(d, a[slot] - 1e-9, side="left")
    return int(np.sum(front >= deps)), int(np.sum(back >= deps))


def write_trace_csv(trace: QueueTrace, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "a", "d", "q", "queue_len"])
        for t in range(len(trace)):
            w.writerow([t, repr(float(trace.cum_arrivals[t])), repr(float(trace.cum_departures[t])),
                        repr(float(trace.cum_flight_departures[t])), repr(float(trace.queue_len[t]))])
