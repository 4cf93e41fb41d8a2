"""Deterministic slot-recommendation LP (full compliance)."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .conic import ConicProgram, InfeasibleError, SolveStats, SolverError, Status, solve
from .timegrid import Schedule
from .windows import VarIndex


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """Per-passenger recommendation cost c[i, t]; NaN outside each flight's window."""

    c: np.ndarray

    def on_window(self, index: VarIndex) -> np.ndarray:
        return self.c[index.flight, index.slot]


@dataclass(frozen=True, eq=False)
class Policy:
    x: np.ndarray
    flight_ids: tuple[str, ...]
    provenance: str
    objective: float | None = None
    solver_stats: SolveStats | None = None
    extra: dict = field(default_factory=dict)

    def arrivals_full_compliance(self, schedule: Schedule) -> np.ndarray:
        return schedule.seats @ self.x


def recommendation_cost(lead: int, mean_lead: int) -> float:
    """Quadratic in slots-before-departure at or beyond the mean lead, linear inside it."""
    return float(lead * lead) if lead >= mean_lead else float(lead)


def build_costs(schedule: Schedule, mean_lead_slots: int) -> CostMatrix:
    if mean_lead_slots < 1:
        raise ValueError("mean lead time must be at least one slot")
    c = np.full((len(schedule), schedule.grid.num_slots), np.nan)
    for i, f in enumerate(schedule.flights):
        for t in f.window:
            c[i, t] = recommendation_cost(f.dep - t, mean_lead_slots)
    return CostMatrix(c)


def assignment_rows(index: VarIndex):
    N = len(index.schedule)
    A = sp.csr_matrix((np.ones(index.n), (index.flight, np.arange(index.n))), shape=(N, index.n))
    return A, np.ones(N)


def capacity_rows(index: VarIndex, schedule: Schedule):
    """One ``sum_i d_i x_it <= C_t`` row for every slot that some window covers."""
    seats = schedule.seats
    slots = np.unique(index.slot)
    row_of = {t: r for r, t in enumerate(slots)}
    rows = np.array([row_of[t] for t in index.slot], dtype=int)
    A = sp.csr_matrix((seats[index.flight], (rows, np.arange(index.n))), shape=(slots.size, index.n))
    return A, schedule.capacity[slots], slots


def objective_vector(index: VarIndex, schedule: Schedule, costs: CostMatrix) -> np.ndarray:
    return costs.on_window(index) * schedule.seats[index.flight]


def build_deterministic_program(schedule: Schedule, costs: CostMatrix) -> tuple[ConicProgram, VarIndex]:
    index = VarIndex(schedule)
    A_eq, b_eq = assignment_rows(index)
    A_ub, b_ub, _ = capacity_rows(index, schedule)
    prog = ConicProgram(objective_vector(index, schedule, costs), A_eq, b_eq, A_ub, b_ub)
    return prog, index


def binding_slots(schedule: Schedule, top: int = 5) -> list[int]:
    """Slots of the departure interval whose seats most exceed the capacity reachable by their windows.

    If no interval is over capacity, the slots with the highest in-window
    seat pressure are returned instead.
    """
    deps = schedule.deps
    seats = schedule.seats
    lens = np.array([f.window_len for f in schedule.flights])
    cap = np.concatenate([[0.0], np.cumsum(schedule.capacity)])
    best, best_slots = 0.0, []
    for a in np.unique(deps):
        for b in np.unique(deps[deps >= a]):
            inside = (deps >= a) & (deps <= b)
            lo = int((deps[inside] - lens[inside]).min())
            excess = seats[inside].sum() - (cap[b] - cap[lo])
            if excess > best:
                best, best_slots = excess, list(range(lo, int(b)))
    if best_slots:
        return best_slots
    pressure = np.zeros(schedule.grid.num_slots)
    for f in schedule.flights:
        pressure[f.dep - f.window_len:f.dep] += f.seats / f.window_len
    pressure -= schedule.capacity
    return [int(t) for t in np.argsort(-pressure, kind="stable")[:top]]


def policy_from_result(res, index: VarIndex, schedule: Schedule, provenance: str) -> Policy:
    if res.status is Status.INFEASIBLE:
        slots = binding_slots(schedule)
        raise InfeasibleError(f"{provenance} program infeasible; pressure at slots {slots}", slots)
    if not res.optimal:
        raise SolverError(f"{provenance} program: solver returned {res.status.value}", res.status)
    x = index.to_matrix(res.primal)
    return Policy(x, tuple(f.id for f in schedule.flights), provenance, res.objective_value, res.stats)


def solve_deterministic(schedule: Schedule, costs: CostMatrix, tol: float = 1e-8) -> Policy:
    """Minimum-cost fractional assignment with full compliance and hard per-slot capacity."""
    prog, index = build_deterministic_program(schedule, costs)
    return policy_from_result(solve(prog, tol), index, schedule, "deterministic")


def policy_objective(policy: Policy, schedule: Schedule, costs: CostMatrix) -> float:
    c = np.nan_to_num(costs.c, nan=0.0)
    return float(np.sum(policy.x * c * schedule.seats[:, None]))


def integer_recommendations(policy: Policy, schedule: Schedule) -> np.ndarray:
    """Per-passenger slot counts by largest remainder, each row summing to the flight's seats."""
    out = np.zeros(policy.x.shape, dtype=np.int64)
    for i, f in enumerate(schedule.flights):
        share = np.clip(policy.x[i], 0.0, None) * f.seats
        base = np.floor(share + 1e-9).astype(np.int64)
        short = f.seats - int(base.sum())
        if short > 0:
            order = np.argsort(-(share - base), kind="stable")
            base[order[:short]] += 1
        out[i] = base
    return out


def write_policy_csv(policy: Policy, schedule: Schedule, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["flight_id", "slot", "fraction"])
        for i, fid in enumerate(policy.flight_ids):
            for t in np.flatnonzero(policy.x[i] >= 1e-9):
                w.writerow([fid, int(t), repr(float(policy.x[i, t]))])


def load_policy_csv(path, schedule: Schedule, provenance: str = "loaded") -> Policy:
    row_of = {f.id: i for i, f in enumerate(schedule.flights)}
    x = np.zeros((len(schedule), schedule.grid.num_slots))
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["flight_id", "slot", "fraction"]:
            raise ValueError(f"{path}: expected header 'flight_id,slot,fraction'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                i, t, v = row_of[row[0]], int(row[1]), float(row[2])
            except (KeyError, ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad policy row {row!r}") from exc
            f = schedule.flights[i]
            if not f.dep - f.window_len <= t < f.dep:
                raise ValueError(f"{path}:{lineno}: slot {t} outside window of {f.id}")
            x[i, t] = v
    sums = x.sum(axis=1)
    if np.any(np.abs(sums - 1.0) > 1e-6):
        bad = schedule.flights[int(np.argmax(np.abs(sums - 1.0)))].id
        raise ValueError(f"{path}: fractions for {bad} do not sum to 1")
    return Policy(x, tuple(f.id for f in schedule.flights), provenance)
