"""Monte-Carlo passenger arrivals under a recommendation policy with sampled compliance."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cc_model import ComplianceModel
from .det_model import Policy
from .queueing import ArrivalStream, QueueTrace, fcfs_evaluate_batch, missed_flight_check, total_time_savings
from .timegrid import Schedule
from .windows import beta_matrix, beta_windows, gather

log = logging.getLogger(__name__)

BASELINE_STREAM = 0
POLICY_STREAM = 1


@dataclass(frozen=True)
class SimConfig:
    seed: int = 0
    n_replications: int = 1
    clamp_alpha: bool = True
    literal: bool = False  # weight strays by alpha instead of 1 - alpha; rows then need rescaling
    records: bool = False
    jobs: int = 1
    stream: int = POLICY_STREAM

    def __post_init__(self):
        if self.n_replications < 1:
            raise ValueError("n_replications must be >= 1")


def replication_rng(seed: int, stream: int, r: int) -> np.random.Generator:
    """Independent substream per (stream, replication); order of execution is irrelevant."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, r)))


def _normalize(p: np.ndarray, literal: bool) -> np.ndarray:
    neg = p < 0
    if np.any(neg):
        log.warning("clipping %d negative arrival masses (unclamped compliance)", int(neg.sum()))
        p = np.where(neg, 0.0, p)
    sums = p.sum(axis=1, keepdims=True)
    if literal:
        log.warning("literal non-complier factor does not normalize; rescaling pmf rows")
    elif np.any(np.abs(sums - 1.0) > 1e-9) and not np.any(neg):
        raise ValueError("realized arrival pmf does not sum to one")
    return p / np.where(sums > 0, sums, 1.0)


def realized_arrival_pmf(x_row, mu_row, sigma_row, beta_row, rng: np.random.Generator,
                         clamp: bool = True, literal: bool = False) -> np.ndarray:
    """Sample compliance per recommended slot and return the flight's arrival pmf.

    All rows are window-aligned, so ``beta_row[j]`` is the no-control mass of
    the slot ``x_row[j]`` recommends.
    """
    alpha = rng.normal(mu_row, sigma_row)
    if clamp:
        alpha = np.clip(alpha, 0.0, 1.0)
    return kernels.realized_pmf(np.atleast_2d(x_row), np.atleast_2d(alpha),
                                np.atleast_2d(beta_row), literal)[0]


def _one_replication(r, xw, muw, sw, bw, seats, cols, T, config: SimConfig) -> ArrivalStream:
    rng = replication_rng(config.seed, config.stream, r)
    alpha = rng.normal(muw, sw)
    if config.clamp_alpha:
        np.clip(alpha, 0.0, 1.0, out=alpha)
    p = kernels.realized_pmf(xw, alpha, bw, config.literal)
    if config.literal or not config.clamp_alpha:
        p = _normalize(p, config.literal)
    # guard the multinomial against round-off in the last column
    p = np.clip(p, 0.0, None)
    p /= p.sum(axis=1, keepdims=True)
    n = rng.multinomial(seats, p)
    counts = np.bincount(cols.ravel(), weights=n.ravel().astype(float), minlength=T)[:T]
    if not config.records:
        return ArrivalStream(counts)
    flat = n.ravel()
    flight = np.repeat(np.repeat(np.arange(n.shape[0]), n.shape[1]), flat)
    slot = np.repeat(cols.ravel(), flat)
    return ArrivalStream(counts, flight, slot)


def generate_arrivals(policy: Policy, schedule: Schedule, beta, compliance: ComplianceModel,
                      config: SimConfig = SimConfig()) -> list[ArrivalStream]:
    """One arrival stream per replication; each flight's seats drawn from its realized pmf."""
    if policy.x.shape != (len(schedule), schedule.grid.num_slots):
        raise ValueError("policy does not cover the schedule")
    W = schedule.max_window
    xw = gather(schedule, policy.x)
    muw = gather(schedule, compliance.mu)
    sw = gather(schedule, compliance.sigma)
    bw = beta_windows(schedule, beta)
    seats = np.array([f.seats for f in schedule.flights], dtype=np.int64)
    cols = schedule.deps[:, None] - W + np.arange(W)[None, :]
    # padding columns (shorter windows) carry zero mass; park them on slot 0
    cols = np.where(cols < 0, 0, cols)
    T = schedule.grid.num_slots
    run = lambda r: _one_replication(r, xw, muw, sw, bw, seats, cols, T, config)  # noqa: E731
    if config.jobs > 1:
        with ThreadPoolExecutor(config.jobs) as pool:
            return list(pool.map(run, range(config.n_replications)))
    return [run(r) for r in range(config.n_replications)]


def baseline_policy(schedule: Schedule, beta) -> Policy:
    """No control: the recommendation is the lead-time law itself."""
    return Policy(beta_matrix(schedule, beta), tuple(f.id for f in schedule.flights), "no_control")


def no_control_compliance(schedule: Schedule) -> ComplianceModel:
    return ComplianceModel.uniform(schedule, 0.0, 0.0)


def generate_baseline(schedule: Schedule, beta, config: SimConfig = SimConfig()) -> list[ArrivalStream]:
    cfg = SimConfig(config.seed, config.n_replications, True, False, config.records, config.jobs,
                    BASELINE_STREAM)
    return generate_arrivals(baseline_policy(schedule, beta), schedule, beta,
                             no_control_compliance(schedule), cfg)


def counts_matrix(streams: list[ArrivalStream]) -> np.ndarray:
    return np.vstack([s.counts for s in streams])


@dataclass
class Evaluation:
    """Replication-level comparison of a controlled policy against no control."""

    tts: np.ndarray
    baseline_traces: list[QueueTrace]
    traces: list[QueueTrace]
    missed_baseline: list[bool]
    missed_policy: list[bool]

    @property
    def tts_mean(self) -> float:
        return float(self.tts.mean())

    @property
    def tts_stderr(self) -> float:
        n = self.tts.size
        return float(self.tts.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0


def evaluate_policy(policy: Policy, schedule: Schedule, beta, compliance: ComplianceModel,
                    config: SimConfig = SimConfig(), baseline: list[QueueTrace] | None = None) -> Evaluation:
    if baseline is None:
        baseline = fcfs_evaluate_batch(counts_matrix(generate_baseline(schedule, beta, config)),
                                       schedule.capacity, schedule)
    streams = generate_arrivals(policy, schedule, beta, compliance, config)
    traces = fcfs_evaluate_batch(counts_matrix(streams), schedule.capacity, schedule)
    tts = np.array([total_time_savings(b, c) for b, c in zip(baseline, traces)])
    return Evaluation(tts, baseline, traces,
                      [missed_flight_check(b).missed for b in baseline],
                      [missed_flight_check(c).missed for c in traces])


def write_counts_csv(streams: list[ArrivalStream], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "slot", "count"])
        for r, s in enumerate(streams):
            for t, c in enumerate(s.counts):
                w.writerow([r, t, int(c)])


def write_stream_csv(streams: list[ArrivalStream], schedule: Schedule, path) -> None:
    ids = [f.id for f in schedule.flights]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["replication", "flight_id", "arrival_slot"])
        for r, s in enumerate(streams):
            if s.flight_index is None:
                raise ValueError("streams were generated without per-passenger records")
            for i, t in zip(s.flight_index, s.slot):
                w.writerow([r, ids[i], int(t)])
