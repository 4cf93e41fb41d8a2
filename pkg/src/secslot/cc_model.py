"""Chance-constrained slot recommendation as a second-order cone program.

Arrivals in slot t are ``xi_t' D~ A_t x_t`` with ``xi_t = [alpha_t; 1]``.
Compliance alpha is Gaussian, so each capacity chance constraint becomes
``mu_t' D~ A_t x_t + z * ||Sigma_t^(1/2) D~ A_t x_t|| <= C_t`` with
``z = Phi^-1(1 - gamma)``.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.special import ndtr, ndtri

from .conic import ConicProgram, SOCBlock, solve
from .det_model import CostMatrix, Policy, assignment_rows, objective_vector, policy_from_result
from .timegrid import Schedule
from .windows import VarIndex, beta_matrix


@dataclass(frozen=True, eq=False)
class ComplianceModel:
    mu: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        sigma = np.array(self.sigma, dtype=float)
        if mu.shape != sigma.shape or mu.ndim != 2:
            raise ValueError("mu and sigma must be matching (N, T) matrices")
        if np.any(mu < 0) or np.any(mu > 1):
            raise ValueError("mean compliance must lie in [0, 1]")
        if np.any(sigma < 0):
            raise ValueError("compliance std must be nonnegative")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)

    @classmethod
    def uniform(cls, schedule: Schedule, mu: float = 0.7, sigma: float = 0.2) -> "ComplianceModel":
        shape = (len(schedule), schedule.grid.num_slots)
        return cls(np.full(shape, float(mu)), np.full(shape, float(sigma)))

    def effective(self) -> "ComplianceModel":
        """Mean of alpha clamped to [0, 1], as a zero-variance model."""
        mu, s = self.mu, self.sigma
        with np.errstate(divide="ignore", invalid="ignore"):
            a = np.where(s > 0, (0.0 - mu) / s, -np.inf)
            b = np.where(s > 0, (1.0 - mu) / s, np.inf)
            pdf = lambda z: np.where(np.isfinite(z), np.exp(-0.5 * z * z) / np.sqrt(2 * np.pi), 0.0)  # noqa: E731
            inside = mu * (ndtr(b) - ndtr(a)) + s * (pdf(a) - pdf(b))
            m = inside + 1.0 * (1.0 - ndtr(b))
        m = np.where(s > 0, m, np.clip(mu, 0, 1))
        return ComplianceModel(np.clip(m, 0.0, 1.0), np.zeros_like(s))


def load_compliance(path, schedule: Schedule, mu: float = 0.7, sigma: float = 0.2) -> ComplianceModel:
    """Read ``flight_id,slot,mu,sigma`` with ``*`` wildcards; the most specific row wins."""
    model = ComplianceModel.uniform(schedule, mu, sigma)
    m, s = model.mu.copy(), model.sigma.copy()
    row_of = {f.id: i for i, f in enumerate(schedule.flights)}
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["flight_id", "slot", "mu", "sigma"]:
            raise ValueError(f"{path}: expected header 'flight_id,slot,mu,sigma'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                fid, slot = row[0].strip(), row[1].strip()
                vals = float(row[2]), float(row[3])
                i = None if fid == "*" else row_of[fid]
                t = None if slot == "*" else int(slot)
            except (KeyError, ValueError, IndexError) as exc:
                raise ValueError(f"{path}:{lineno}: bad compliance row {row!r}") from exc
            rows.append(((i is not None) + (t is not None), lineno, i, t, vals))
    for _, _, i, t, (mv, sv) in sorted(rows, key=lambda r: (r[0], r[1])):
        ri = slice(None) if i is None else i
        ct = slice(None) if t is None else t
        m[ri, ct] = mv
        s[ri, ct] = sv
    return ComplianceModel(m, s)


@dataclass(frozen=True)
class CCConfig:
    gamma: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.gamma < 0.5:
            raise ValueError("gamma must lie in (0, 0.5)")

    @property
    def z(self) -> float:
        return float(ndtri(1.0 - self.gamma))


def expected_arrivals(policy: Policy, schedule: Schedule, beta, compliance: ComplianceModel) -> np.ndarray:
    """E[arrivals per slot]: compliers at the recommended slot, the rest spread by beta.

    Non-compliance of passengers recommended slot s uses that slot's mean mu_is.
    """
    x = np.asarray(policy.x if isinstance(policy, Policy) else policy, dtype=float)
    T = schedule.grid.num_slots
    if x.shape != (len(schedule), T) or compliance.mu.shape != x.shape:
        raise ValueError("policy / compliance dimensions do not match the schedule")
    d = schedule.seats
    stray = ((1.0 - compliance.mu) * x).sum(axis=1)
    bm = beta_matrix(schedule, beta)
    return d @ (compliance.mu * x) + (d * stray) @ bm


@dataclass(frozen=True, eq=False)
class SlotConstraintBlocks:
    """Matrix pieces of one slot's arrival count ``xi_t' D~ A_t x_t``.

    ``stacked_index[k]`` is the LP column of entry k of the stacked vector
    ``[x_.t; x_.(lead 1); ...; x_.(lead M)]``, or -1 where no variable exists.
    """

    slot: int
    A: sp.csr_matrix
    D_tilde: sp.csr_matrix
    mu_vec: np.ndarray
    Sigma: sp.csr_matrix
    stacked_index: np.ndarray
    n_vars: int

    def selector(self) -> sp.csr_matrix:
        """Sparse map from the global variable vector to the stacked x_t."""
        k = np.flatnonzero(self.stacked_index >= 0)
        return sp.csr_matrix((np.ones(k.size), (k, self.stacked_index[k])),
                             shape=(self.stacked_index.size, self.n_vars))

    def arrival_map(self) -> sp.csr_matrix:
        """``D~ A_t P``: rows give the complier and non-complier parts per flight."""
        return (self.D_tilde @ self.A @ self.selector()).tocsr()

    def evaluate(self, x_global, alpha_t) -> float:
        xi = np.concatenate([alpha_t, np.ones_like(alpha_t)])
        return float(xi @ (self.arrival_map() @ x_global))


def build_slot_blocks(schedule: Schedule, beta, compliance: ComplianceModel, t: int,
                      index: VarIndex | None = None) -> SlotConstraintBlocks:
    T = schedule.grid.num_slots
    if not 0 <= t < T:
        raise ValueError(f"slot {t} outside grid")
    index = index or VarIndex(schedule)
    N = len(schedule)
    M = schedule.max_window
    d = schedule.seats
    bt = beta_matrix(schedule, beta)[:, t]

    # A_t = [I, -B_t, ..., -B_t; 0, B_t, ..., B_t]
    B = sp.diags(bt, format="csr")
    top = sp.hstack([sp.identity(N, format="csr")] + [-B] * M)
    bottom = sp.hstack([sp.csr_matrix((N, N))] + [B] * M)
    A = sp.vstack([top, bottom], format="csr")
    A.eliminate_zeros()

    D = sp.diags(d)
    D_tilde = sp.block_diag([D, D], format="csr")
    mu_vec = np.concatenate([compliance.mu[:, t], np.ones(N)])
    Sigma = sp.block_diag([sp.diags(compliance.sigma[:, t] ** 2), sp.csr_matrix((N, N))], format="csr")

    stacked = np.full((M + 1) * N, -1, dtype=np.int64)
    for i in range(N):
        stacked[i] = index.column(i, t)
        dep = schedule.flights[i].dep
        for k in range(1, M + 1):
            stacked[k * N + i] = index.column(i, dep - k)
    return SlotConstraintBlocks(t, A, D_tilde, mu_vec, Sigma, stacked, index.n)


def _sqrt_psd(Sigma: sp.spmatrix):
    """Factor R with R'R = Sigma, returned as sparse rows (diagonal fast path)."""
    S = sp.csr_matrix(Sigma)
    off = S - sp.diags(S.diagonal())
    if off.nnz == 0 or not np.any(off.data):
        return sp.diags(np.sqrt(np.clip(S.diagonal(), 0.0, None)), format="csr")
    w, V = np.linalg.eigh(S.toarray())
    return sp.csr_matrix(np.sqrt(np.clip(w, 0.0, None))[:, None] * V.T)


def soc_constraint(blocks: SlotConstraintBlocks, capacity: float, gamma: float) -> SOCBlock:
    """Cone row ``||z R L x|| <= C_t - mu' L x`` with ``L = D~ A_t P``."""
    z = CCConfig(gamma).z
    L = blocks.arrival_map()
    mean_row = np.asarray(L.T @ blocks.mu_vec).ravel()
    G = (z * (_sqrt_psd(blocks.Sigma) @ L)).tocsr()
    G.eliminate_zeros()
    keep = np.flatnonzero(np.diff(G.indptr))
    G = G[keep]
    return SOCBlock(G, np.zeros(G.shape[0]), -mean_row, float(capacity))


def build_cc_program(schedule: Schedule, costs: CostMatrix, beta, compliance: ComplianceModel,
                     config: CCConfig = CCConfig()) -> tuple[ConicProgram, VarIndex]:
    index = VarIndex(schedule)
    A_eq, b_eq = assignment_rows(index)
    socs = [soc_constraint(build_slot_blocks(schedule, beta, compliance, int(t), index),
                           schedule.capacity[t], config.gamma)
            for t in np.unique(index.slot)]
    prog = ConicProgram(objective_vector(index, schedule, costs), A_eq, b_eq, soc=socs)
    return prog, index


def solve_chance_constrained(schedule: Schedule, costs: CostMatrix, beta, compliance: ComplianceModel,
                             config: CCConfig = CCConfig(), tol: float = 1e-8) -> Policy:
    prog, index = build_cc_program(schedule, costs, beta, compliance, config)
    policy = policy_from_result(solve(prog, tol), index, schedule, "chance_constrained")
    policy.extra["gamma"] = config.gamma
    return policy


def slot_arrival_weights(policy, schedule: Schedule, beta):
    """Arrivals per slot as ``base[t] + sum_i alpha[i, t] * w[i, t]`` (xi_t layout).

    Computed entrywise, independently of the block matrices.
    """
    x = np.asarray(policy.x if isinstance(policy, Policy) else policy, dtype=float)
    d = schedule.seats[:, None]
    bm = beta_matrix(schedule, beta)
    total = x.sum(axis=1, keepdims=True)
    w = d * (x - bm * total)
    base = (d * bm * total).sum(axis=0)
    return base, w


def violation_frequencies(policy, schedule: Schedule, beta, compliance: ComplianceModel,
                          n_samples: int = 10_000, seed: int = 0, clamp: bool = False,
                          chunk: int = 2_000) -> np.ndarray:
    """Monte-Carlo frequency, per slot, of arrivals exceeding capacity under sampled alpha."""
    base, w = slot_arrival_weights(policy, schedule, beta)
    rng = np.random.default_rng(seed)
    T = schedule.grid.num_slots
    hits = np.zeros(T)
    active = [t for t in range(T) if np.any(w[:, t]) or base[t] > 0]
    rows = {t: np.flatnonzero(w[:, t]) for t in active}
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        for t in active:
            r = rows[t]
            a = rng.normal(compliance.mu[r, t], compliance.sigma[r, t], size=(m, r.size))
            if clamp:
                np.clip(a, 0.0, 1.0, out=a)
            y = base[t] + a @ w[r, t]
            hits[t] += np.count_nonzero(y > schedule.capacity[t])
        done += m
    return hits / n_samples


def violation_probabilities(policy, schedule: Schedule, beta, compliance: ComplianceModel) -> np.ndarray:
    """Exact Gaussian P(arrivals_t > C_t) for each slot (unclamped alpha)."""
    base, w = slot_arrival_weights(policy, schedule, beta)
    mean = base + (compliance.mu * w).sum(axis=0)
    sd = np.sqrt(((compliance.sigma * w) ** 2).sum(axis=0))
    slack = schedule.capacity - mean
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(sd > 0, ndtr(-slack / np.where(sd > 0, sd, 1.0)), (slack < 0).astype(float))
    return p


def early_assignment_mass(policy: Policy, schedule: Schedule, mean_lead_slots: int) -> float:
    """Seats recommended more than the mean lead time before departure."""
    lead = schedule.deps[:, None] - np.arange(schedule.grid.num_slots)[None, :]
    return float(np.sum(schedule.seats[:, None] * policy.x * (lead > mean_lead_slots)))

