"""One-at-a-time sweeps over gamma, mean compliance and compliance spread."""
from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .cc_model import CCConfig, ComplianceModel, early_assignment_mass, solve_chance_constrained
from .conic import InfeasibleError, SolverError
from .det_model import CostMatrix
from .queueing import fcfs_evaluate_batch
from .simulate import SimConfig, counts_matrix, evaluate_policy, generate_baseline
from .timegrid import Schedule

PARAMETERS = ("gamma", "mu", "sigma")
DEFAULT_GRIDS = {
    "gamma": (0.01, 0.05, 0.1),
    "mu": (0.6, 0.75, 0.9),
    "sigma": (0.1, 0.2, 0.3),
}
BASE_GAMMA = 0.05


@dataclass(frozen=True, eq=False)
class SweepSpec:
    parameter: str
    values: tuple[float, ...]
    schedule: Schedule
    beta: object
    costs: CostMatrix
    compliance: ComplianceModel
    config: CCConfig = CCConfig(BASE_GAMMA)
    mean_lead_slots: int = 4

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}")
        if not self.values:
            raise ValueError("sweep needs at least one value")
        for v in self.values:
            if self.parameter == "gamma" and not 0 < v < 0.5:
                raise ValueError(f"gamma={v} outside (0, 0.5)")
            if self.parameter == "mu" and not 0 <= v <= 1:
                raise ValueError(f"mu={v} outside [0, 1]")
            if self.parameter == "sigma" and v < 0:
                raise ValueError(f"sigma={v} is negative")

    def point(self, value: float) -> tuple[ComplianceModel, CCConfig]:
        comp, cfg = self.compliance, self.config
        if self.parameter == "gamma":
            cfg = CCConfig(value)
        elif self.parameter == "mu":
            comp = ComplianceModel(np.full_like(comp.mu, value), comp.sigma)
        else:
            comp = ComplianceModel(comp.mu, np.full_like(comp.sigma, value))
        return comp, cfg


@dataclass
class SweepRecord:
    param: str
    value: float
    status: str
    objective: float = float("nan")
    tts_mean: float = float("nan")
    tts_stderr: float = float("nan")
    early_mass: float = float("nan")
    violation_rates: np.ndarray = field(default_factory=lambda: np.zeros(0))

    @property
    def max_violation_rate(self) -> float:
        return float(self.violation_rates.max()) if self.violation_rates.size else float("nan")


def run_point(spec: SweepSpec, value: float, sim: SimConfig, baseline=None) -> SweepRecord:
    comp, cfg = spec.point(value)
    try:
        policy = solve_chance_constrained(spec.schedule, spec.costs, spec.beta, comp, cfg)
    except InfeasibleError:
        return SweepRecord(spec.parameter, value, "infeasible")
    except SolverError as exc:
        return SweepRecord(spec.parameter, value, exc.status.value)
    ev = evaluate_policy(policy, spec.schedule, spec.beta, comp, sim, baseline)
    arrivals = np.vstack([np.diff(tr.cum_arrivals, prepend=0.0)[:spec.schedule.grid.num_slots]
                          for tr in ev.traces])
    rates = (arrivals > spec.schedule.capacity[None, :]).mean(axis=0)
    return SweepRecord(spec.parameter, value, "optimal", policy.objective, ev.tts_mean, ev.tts_stderr,
                       early_assignment_mass(policy, spec.schedule, spec.mean_lead_slots), rates)


def _run_point_args(args):
    return run_point(*args)


def run_sweep(spec: SweepSpec, sim: SimConfig = SimConfig(n_replications=20), jobs: int = 1) -> list[SweepRecord]:
    """One record per sweep value, in grid order; infeasible points are recorded, not raised."""
    base = fcfs_evaluate_batch(counts_matrix(generate_baseline(spec.schedule, spec.beta, sim)),
                               spec.schedule.capacity, spec.schedule)
    sim = replace(sim, jobs=1) if jobs > 1 else sim
    tasks = [(spec, v, sim, base) for v in spec.values]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            return list(pool.map(_run_point_args, tasks))
    return [run_point(*t) for t in tasks]


def _fmt(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def write_sweep_csv(records: list[SweepRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["param", "value", "objective", "tts_mean", "tts_stderr",
                    "max_violation_rate", "early_mass", "status"])
        for r in records:
            w.writerow([r.param, repr(float(r.value)), _fmt(r.objective), _fmt(r.tts_mean),
                        _fmt(r.tts_stderr), _fmt(r.max_violation_rate), _fmt(r.early_mass), r.status])
