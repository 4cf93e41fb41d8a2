from __future__ import annotations

import numpy as np
import pytest

from secslot.cc_model import CCConfig, ComplianceModel, solve_chance_constrained
from secslot.det_model import build_costs, solve_deterministic
from secslot.leadtime import discretize_leadtime, mean_leadtime_slots
from secslot.timegrid import Flight, Schedule, TimeGrid, synth_schedule

REFERENCE_SEED = 7


class Reference:
    """The congested synthetic day: 260 flights, 49,034 seats, 800 pax per slot."""

    def __init__(self):
        self.schedule = synth_schedule(REFERENCE_SEED)
        self.beta = discretize_leadtime()
        self.L = mean_leadtime_slots()
        self.costs = build_costs(self.schedule, self.L)
        self.compliance = ComplianceModel.uniform(self.schedule, 0.7, 0.2)
        self._cc = {}
        self._det = None

    @property
    def det(self):
        if self._det is None:
            self._det = solve_deterministic(self.schedule, self.costs)
        return self._det

    def cc(self, gamma: float):
        if gamma not in self._cc:
            self._cc[gamma] = solve_chance_constrained(self.schedule, self.costs, self.beta,
                                                       self.compliance, CCConfig(gamma))
        return self._cc[gamma]


@pytest.fixture(scope="session")
def reference():
    return Reference()


@pytest.fixture(scope="session")
def beta():
    return discretize_leadtime()


def small_schedule(rng: np.random.Generator, n_flights: int, window: int = 16, num_slots: int = 40,
                   capacity=None, seat_range=(50, 400)) -> Schedule:
    grid = TimeGrid(num_slots=num_slots)
    deps = rng.integers(window, num_slots, size=n_flights)
    seats = rng.integers(seat_range[0], seat_range[1] + 1, size=n_flights)
    flights = tuple(Flight(f"F{k:02d}", int(d), int(s), window) for k, (d, s) in enumerate(zip(deps, seats)))
    if capacity is None:
        capacity = rng.integers(300, 900, size=num_slots).astype(float)
    return Schedule(grid, flights, capacity)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
