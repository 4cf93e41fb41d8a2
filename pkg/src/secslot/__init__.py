"""Arrival-slot recommendations for airport security queues under uncertain compliance."""
__version__ = "0.1.0"

from .cc_model import (CCConfig, ComplianceModel, build_slot_blocks, expected_arrivals, soc_constraint,
                       solve_chance_constrained)
from .conic import ConicProgram, InfeasibleError, SOCBlock, SolverError, Status, solve
from .det_model import CostMatrix, Policy, build_costs, solve_deterministic
from .leadtime import BetaVector, SkewNormalParams, discretize_leadtime, mean_leadtime_slots, skewnormal_pdf
from .queueing import ArrivalStream, QueueTrace, fcfs_evaluate, missed_flight_check, total_time_savings
from .simulate import SimConfig, generate_arrivals, realized_arrival_pmf
from .timegrid import Flight, Schedule, TimeGrid, load_schedule, synth_schedule

__all__ = [
    "ArrivalStream", "BetaVector", "CCConfig", "ComplianceModel", "ConicProgram", "CostMatrix", "Flight",
    "InfeasibleError", "Policy", "QueueTrace", "SOCBlock", "Schedule", "SimConfig", "SkewNormalParams",
    "SolverError", "Status", "TimeGrid", "build_costs", "build_slot_blocks", "discretize_leadtime",
    "expected_arrivals", "fcfs_evaluate", "generate_arrivals", "load_schedule", "mean_leadtime_slots",
    "missed_flight_check", "realized_arrival_pmf", "skewnormal_pdf", "soc_constraint", "solve",
    "solve_chance_constrained", "solve_deterministic", "synth_schedule", "total_time_savings",
]
