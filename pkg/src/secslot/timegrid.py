"""Discrete time grid, flight schedule model, and schedule ingestion/generation."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

DEFAULT_SLOT_MINUTES = 15
DEFAULT_NUM_SLOTS = 112
DEFAULT_WINDOW = 16
DEFAULT_CAPACITY = 800


class ScheduleError(ValueError):
    """Raised for malformed or inconsistent schedule input."""


@dataclass(frozen=True)
class TimeGrid:
    slot_minutes: int = DEFAULT_SLOT_MINUTES
    num_slots: int = DEFAULT_NUM_SLOTS
    origin: int = 0  # wall-clock minutes after midnight of slot 0

    def __post_init__(self):
        if self.slot_minutes <= 0:
            raise ScheduleError("slot_minutes must be positive")
        if self.num_slots <= 0:
            raise ScheduleError("num_slots must be positive")

    @property
    def dt_hours(self) -> float:
        return self.slot_minutes / 60.0

    def slot_of(self, minutes: int) -> int:
        """Slot index containing wall-clock ``minutes`` (rounded down)."""
        return (minutes - self.origin) // self.slot_minutes

    def clock(self, slot: int) -> str:
        minutes = self.origin + slot * self.slot_minutes
        return f"{minutes // 60:02d}:{minutes % 60:02d}"


@dataclass(frozen=True)
class Flight:
    id: str
    dep: int
    seats: int
    window_len: int = DEFAULT_WINDOW

    def __post_init__(self):
        if self.seats < 1:
            raise ScheduleError(f"flight {self.id}: non-positive seats")
        if self.window_len < 1:
            raise ScheduleError(f"flight {self.id}: window_len must be >= 1")

    @property
    def window(self) -> range:
        """Recommendation window Q_i = [dep - M_i, dep)."""
        return range(self.dep - self.window_len, self.dep)


@dataclass(frozen=True, eq=False)
class Schedule:
    grid: TimeGrid
    flights: tuple[Flight, ...]
    capacity: np.ndarray = field(repr=False)

    def __post_init__(self):
        flights = tuple(sorted(self.flights, key=lambda f: (f.dep, f.id)))
        object.__setattr__(self, "flights", flights)
        cap = np.asarray(self.capacity, dtype=float)
        if cap.ndim == 0:
            cap = np.full(self.grid.num_slots, float(cap))
        if cap.shape != (self.grid.num_slots,):
            raise ScheduleError(
                f"capacity has length {cap.size}, grid has {self.grid.num_slots} slots")
        if np.any(cap < 0):
            raise ScheduleError("capacity must be nonnegative")
        cap.setflags(write=False)
        object.__setattr__(self, "capacity", cap)

        seen = set()
        for f in flights:
            if f.id in seen:
                raise ScheduleError(f"duplicate flight id {f.id!r}")
            seen.add(f.id)
            if f.dep - f.window_len < 0 or f.dep >= self.grid.num_slots:
                raise ScheduleError(
                    f"flight {f.id}: departure slot {f.dep} outside grid "
                    f"(window needs [{f.dep - f.window_len}, {f.dep}) inside [0, {self.grid.num_slots}))")
        if flights and self.total_seats <= 0:
            raise ScheduleError("schedule has no seats")

    def __eq__(self, other):
        if not isinstance(other, Schedule):
            return NotImplemented
        return (self.grid == other.grid and self.flights == other.flights
                and np.array_equal(self.capacity, other.capacity))

    def __len__(self):
        return len(self.flights)

    @property
    def seats(self) -> np.ndarray:
        return np.array([f.seats for f in self.flights], dtype=float)

    @property
    def deps(self) -> np.ndarray:
        return np.array([f.dep for f in self.flights], dtype=int)

    @property
    def total_seats(self) -> int:
        return sum(f.seats for f in self.flights)

    @property
    def max_window(self) -> int:
        return max((f.window_len for f in self.flights), default=0)

    def with_capacity(self, capacity) -> "Schedule":
        return Schedule(self.grid, self.flights, capacity)

    def window_mask(self) -> np.ndarray:
        """Boolean (N, num_slots) mask of each flight's recommendation window."""
        mask = np.zeros((len(self.flights), self.grid.num_slots), dtype=bool)
        for i, f in enumerate(self.flights):
            mask[i, f.dep - f.window_len:f.dep] = True
        return mask


def _parse_hhmm(text: str) -> int:
    hh, sep, mm = text.strip().partition(":")
    if not sep or not hh.isdigit() or not mm.isdigit() or len(mm) != 2:
        raise ValueError(f"bad departure time {text!r}, expected HH:MM")
    h, m = int(hh), int(mm)
    if m >= 60:
        raise ValueError(f"bad departure time {text!r}, minutes >= 60")
    return 60 * h + m


def load_capacity(path, grid: TimeGrid, default: float = DEFAULT_CAPACITY) -> np.ndarray:
    """Read a ``slot,capacity`` CSV; slots without a row keep ``default``."""
    cap = np.full(grid.num_slots, float(default))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["slot", "capacity"]:
            raise ScheduleError(f"{path}: expected header 'slot,capacity'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                slot, value = int(row[0]), float(row[1])
            except (ValueError, IndexError) as exc:
                raise ScheduleError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if not 0 <= slot < grid.num_slots:
                raise ScheduleError(f"{path}:{lineno}: slot {slot} outside grid")
            if value < 0:
                raise ScheduleError(f"{path}:{lineno}: negative capacity")
            cap[slot] = value
    return cap


def load_schedule(path, grid: TimeGrid | None = None, capacity=DEFAULT_CAPACITY,
                  window_len: int = DEFAULT_WINDOW) -> Schedule:
    """Load a ``flight_id,departure,seats`` CSV into a validated Schedule.

    Departure times round down to the slot containing them. ``capacity`` is a
    scalar, a per-slot vector, or a path to a ``slot,capacity`` CSV.
    """
    grid = grid or TimeGrid()
    path = Path(path)
    flights = []
    ids = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["flight_id", "departure", "seats"]:
            raise ScheduleError(f"{path}: expected header 'flight_id,departure,seats'")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise ScheduleError(f"{path}:{lineno}: malformed row {row!r}")
            fid = row[0].strip()
            try:
                minutes = _parse_hhmm(row[1])
                seats = int(row[2])
            except ValueError as exc:
                raise ScheduleError(f"{path}:{lineno}: malformed row ({exc})") from exc
            if seats <= 0:
                raise ScheduleError(f"{path}:{lineno}: non-positive seats")
            if fid in ids:
                raise ScheduleError(f"{path}:{lineno}: duplicate flight id {fid!r}")
            ids.add(fid)
            dep = grid.slot_of(minutes)
            if dep - window_len < 0 or dep >= grid.num_slots:
                raise ScheduleError(f"{path}:{lineno}: departure {row[1].strip()} outside grid")
            flights.append(Flight(fid, dep, seats, window_len))
    if isinstance(capacity, (str, Path)):
        capacity = load_capacity(capacity, grid)
    return Schedule(grid, tuple(flights), capacity)


def save_schedule(schedule: Schedule, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flight_id", "departure", "seats"])
        for f in schedule.flights:
            w.writerow([f.id, schedule.grid.clock(f.dep), f.seats])


def save_capacity(schedule: Schedule, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "capacity"])
        for t, c in enumerate(schedule.capacity):
            w.writerow([t, repr(float(c))])


def default_peak_profile(grid: TimeGrid | None = None) -> list[tuple[int, float]]:
    """Bimodal departure profile with morning (06-08) and midday (12-14) peaks.

    A low base rate runs from 05:00 to 22:00; nothing departs before 05:00 so
    every 4-hour window fits a midnight-origin grid.
    """
    grid = grid or TimeGrid()
    out = []
    for t in range(grid.num_slots):
        minutes = grid.origin + t * grid.slot_minutes
        hour = minutes / 60.0
        if not 5.0 <= hour < 22.0 or t < DEFAULT_WINDOW:
            continue
        w = 1.0
        if 6.0 <= hour < 8.0:
            w = 3.0
        elif 12.0 <= hour < 14.0:
            w = 2.0
        out.append((t, w))
    return out


# narrowbody-heavy mix typical of a European short-haul terminal
_AIRCRAFT_SEATS = np.array([100, 150, 174, 180, 186, 189, 220, 250])
_AIRCRAFT_WEIGHTS = np.array([0.05, 0.10, 0.20, 0.20, 0.20, 0.15, 0.07, 0.03])


def _apportion(total: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder split of ``total`` into integers >= 1 proportional to weights."""
    n = weights.size
    spare = total - n
    share = weights / weights.sum() * spare
    base = np.floor(share).astype(np.int64)
    short = spare - int(base.sum())
    order = np.argsort(-(share - base), kind="stable")
    base[order[:short]] += 1
    return base + 1


def synth_schedule(seed: int, n_flights: int = 260, total_seats: int = 49_034,
                   peak_profile: Sequence[tuple[int, float]] | None = None,
                   grid: TimeGrid | None = None, capacity=DEFAULT_CAPACITY,
                   window_len: int = DEFAULT_WINDOW) -> Schedule:
    """Generate a synthetic departure schedule, deterministic in ``seed``."""
    grid = grid or TimeGrid()
    if n_flights < 1:
        raise ScheduleError("n_flights must be >= 1")
    if total_seats < n_flights:
        raise ScheduleError("infeasible partition: total_seats < n_flights")
    profile = list(peak_profile) if peak_profile is not None else default_peak_profile(grid)
    slots = np.array([s for s, _ in profile], dtype=int)
    weights = np.array([w for _, w in profile], dtype=float)
    if slots.size == 0 or np.any(weights < 0) or weights.sum() <= 0:
        raise ScheduleError("peak profile needs nonnegative weights with at least one positive")

    rng = np.random.default_rng(seed)
    if n_flights == 1:
        deps = np.array([slots[int(np.argmax(weights))]])
    else:
        deps = rng.choice(slots, size=n_flights, p=weights / weights.sum())
    raw = rng.choice(_AIRCRAFT_SEATS, size=n_flights, p=_AIRCRAFT_WEIGHTS).astype(float)
    seats = _apportion(total_seats, raw)

    width = len(str(n_flights))
    flights = tuple(Flight(f"SY{k + 1:0{max(4, width)}d}", int(d), int(s), window_len)
                    for k, (d, s) in enumerate(zip(deps, seats)))
    return Schedule(grid, flights, capacity)
