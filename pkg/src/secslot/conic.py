"""Solver-agnostic conic program: linear rows plus second-order cones.

Backends: scipy HiGHS for programs without cones, Clarabel otherwise. The
returned primal is always re-checked here against the program rows.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


class SolverError(RuntimeError):
    """Solver breakdown or unusable result."""

    def __init__(self, message, status=Status.NUMERICAL_FAILURE):
        super().__init__(message)
        self.status = status


class InfeasibleError(SolverError):
    def __init__(self, message, binding_slots=()):
        super().__init__(message, Status.INFEASIBLE)
        self.binding_slots = tuple(binding_slots)


@dataclass(frozen=True, eq=False)
class SOCBlock:
    """Cone row ``||G x + h||_2 <= f . x + g``."""

    G: sp.csr_matrix
    h: np.ndarray
    f: np.ndarray
    g: float

    @property
    def is_linear(self) -> bool:
        return self.G.nnz == 0 and not np.any(self.h)

    def residual(self, x) -> float:
        """Amount by which the cone row is violated (<= 0 when satisfied)."""
        return float(np.linalg.norm(self.G @ x + self.h) - (self.f @ x + self.g))


def _csr(rows, n) -> sp.csr_matrix:
    if rows is None:
        return sp.csr_matrix((0, n))
    return sp.csr_matrix(rows, dtype=float)


@dataclass(eq=False)
class ConicProgram:
    """minimize c.x subject to A_eq x = b_eq, A_ub x <= b_ub, cones, x >= lb."""

    c: np.ndarray
    A_eq: sp.csr_matrix | None = None
    b_eq: np.ndarray | None = None
    A_ub: sp.csr_matrix | None = None
    b_ub: np.ndarray | None = None
    soc: list[SOCBlock] = field(default_factory=list)
    lb: np.ndarray | None = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float)
        n = self.n
        self.A_eq = _csr(self.A_eq, n)
        self.A_ub = _csr(self.A_ub, n)
        self.b_eq = np.zeros(0) if self.b_eq is None else np.asarray(self.b_eq, dtype=float)
        self.b_ub = np.zeros(0) if self.b_ub is None else np.asarray(self.b_ub, dtype=float)
        self.lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float)
        if self.A_eq.shape != (self.b_eq.size, n) or self.A_ub.shape != (self.b_ub.size, n):
            raise ValueError("constraint matrix shapes do not match the variable count")
        if self.lb.shape != (n,):
            raise ValueError("lb must have one entry per variable")
        for blk in self.soc:
            if blk.G.shape[1] != n or blk.f.shape != (n,) or blk.h.shape != (blk.G.shape[0],):
                raise ValueError("cone block does not match the variable count")

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def has_cones(self) -> bool:
        return any(not b.is_linear for b in self.soc)


@dataclass(frozen=True)
class SolveStats:
    backend: str
    iterations: int
    runtime: float
    max_linear_violation: float = 0.0
    max_cone_violation: float = 0.0


@dataclass(frozen=True, eq=False)
class SolveResult:
    status: Status
    primal: np.ndarray | None
    objective_value: float | None
    stats: SolveStats

    @property
    def optimal(self) -> bool:
        return self.status is Status.OPTIMAL


def check_primal(prog: ConicProgram, x, tol: float = 1e-8, soc_tol: float = 1e-7) -> tuple[bool, float, float]:
    """Independent feasibility check. Violations are scaled by (1 + |rhs|)."""
    x = np.asarray(x, dtype=float)
    lin = 0.0
    if prog.b_eq.size:
        lin = max(lin, float(np.max(np.abs(prog.A_eq @ x - prog.b_eq) / (1 + np.abs(prog.b_eq)))))
    if prog.b_ub.size:
        lin = max(lin, float(np.max((prog.A_ub @ x - prog.b_ub) / (1 + np.abs(prog.b_ub)))))
    finite = np.isfinite(prog.lb)
    if np.any(finite):
        lin = max(lin, float(np.max((prog.lb[finite] - x[finite]) / (1 + np.abs(prog.lb[finite])))))
    cone = 0.0
    for blk in prog.soc:
        cone = max(cone, blk.residual(x) / (1 + abs(blk.g)))
    return lin <= tol and cone <= soc_tol, lin, cone


def _linear_rows(prog: ConicProgram):
    """Cone blocks that carry no norm term, as extra ``<=`` rows."""
    rows, rhs = [], []
    for blk in prog.soc:
        if blk.is_linear:
            rows.append(sp.csr_matrix(-blk.f))
            rhs.append(blk.g)
    return rows, rhs


def _solve_highs(prog: ConicProgram, tol: float):
    from scipy.optimize import linprog

    extra, extra_rhs = _linear_rows(prog)
    A_ub = sp.vstack([prog.A_ub] + extra, format="csr") if extra else prog.A_ub
    b_ub = np.concatenate([prog.b_ub, extra_rhs]) if extra else prog.b_ub
    bounds = np.column_stack([np.where(np.isfinite(prog.lb), prog.lb, -np.inf),
                              np.full(prog.n, np.inf)])
    res = linprog(prog.c,
                  A_ub=A_ub if A_ub.shape[0] else None, b_ub=b_ub if b_ub.size else None,
                  A_eq=prog.A_eq if prog.A_eq.shape[0] else None, b_eq=prog.b_eq if prog.b_eq.size else None,
                  bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": min(tol, 1e-7),
                           "dual_feasibility_tolerance": min(tol, 1e-7)})
    status = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}.get(res.status, Status.NUMERICAL_FAILURE)
    iters = int(getattr(res, "nit", 0) or 0)
    return status, (res.x if status is Status.OPTIMAL else None), iters


def _solve_clarabel(prog: ConicProgram, tol: float):
    import clarabel

    n = prog.n
    blocks, rhs, cones = [], [], []
    if prog.A_eq.shape[0]:
        blocks.append(prog.A_eq)
        rhs.append(prog.b_eq)
        cones.append(clarabel.ZeroConeT(prog.A_eq.shape[0]))
    extra, extra_rhs = _linear_rows(prog)
    finite = np.flatnonzero(np.isfinite(prog.lb))
    lb_rows = sp.csr_matrix((-np.ones(finite.size), (np.arange(finite.size), finite)), shape=(finite.size, n))
    nonneg = [prog.A_ub] + extra + [lb_rows]
    nonneg_rhs = np.concatenate([prog.b_ub, np.asarray(extra_rhs, dtype=float), -prog.lb[finite]])
    if nonneg_rhs.size:
        blocks.append(sp.vstack(nonneg, format="csr"))
        rhs.append(nonneg_rhs)
        cones.append(clarabel.NonnegativeConeT(nonneg_rhs.size))
    for blk in prog.soc:
        if blk.is_linear:
            continue
        blocks.append(sp.vstack([sp.csr_matrix(-blk.f), -blk.G], format="csr"))
        rhs.append(np.concatenate([[blk.g], blk.h]))
        cones.append(clarabel.SecondOrderConeT(blk.G.shape[0] + 1))

    A = sp.vstack(blocks, format="csc")
    b = np.concatenate(rhs)
    # objective scaled to unit max-coefficient; the reported value uses the raw c
    scale = float(np.max(np.abs(prog.c))) or 1.0
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    # gap tolerances a notch tighter than the contract so the primal objective,
    # not just the duality gap, lands within tol of the optimum
    settings.tol_gap_abs = tol * 1e-2
    settings.tol_gap_rel = tol * 1e-2
    settings.tol_feas = tol * 1e-2
    settings.tol_ktratio = 1e-8
    settings.max_iter = 400
    solver = clarabel.DefaultSolver(sp.csc_matrix((n, n)), prog.c / scale, A, b, cones, settings)
    sol = solver.solve()
    name = str(sol.status)
    if name in ("Solved", "AlmostSolved"):
        status = Status.OPTIMAL
    elif "PrimalInfeasible" in name:
        status = Status.INFEASIBLE
    elif "DualInfeasible" in name:
        status = Status.UNBOUNDED
    else:
        status = Status.NUMERICAL_FAILURE
    x = np.asarray(sol.x) if status is Status.OPTIMAL else None
    return status, x, int(sol.iterations)


def solve(prog: ConicProgram, tol: float = 1e-8, soc_tol: float = 1e-7) -> SolveResult:
    """Solve ``prog``; an optimal status guarantees the re-checked primal is feasible within tolerance."""
    start = time.perf_counter()
    if prog.has_cones:
        backend = "clarabel"
        status, x, iters = _solve_clarabel(prog, tol)
    else:
        backend = "highs"
        status, x, iters = _solve_highs(prog, tol)
    lin = cone = 0.0
    obj = None
    if status is Status.OPTIMAL:
        # interior-point iterates sit a hair inside/outside bounds; snap before checking
        x = np.where(np.isfinite(prog.lb), np.maximum(x, prog.lb), x)
        ok, lin, cone = check_primal(prog, x, tol, soc_tol)
        if ok:
            obj = float(prog.c @ x)
        else:
            status, x = Status.NUMERICAL_FAILURE, None
    else:
        x = None
    stats = SolveStats(backend, iters, time.perf_counter() - start, lin, cone)
    return SolveResult(status, x, obj, stats)


def dump_program(prog: ConicProgram, path) -> None:
    """Write ``prog`` in a sparse text format for debugging and cross-solver comparison.

    Sections in order: ``vars n``; ``obj k`` then k lines ``j value``;
    ``eq m k`` then k lines ``i j value`` and a ``rhs`` line; the same for
    ``ub``; ``lb`` with n values; then ``soc`` blocks, each as
    ``soc rows k g`` + k triples + ``h`` line + ``f k'`` + k' pairs.
    """
    def triples(M):
        M = sp.coo_matrix(M)
        return [f"{i} {j} {float(v)!r}" for i, j, v in zip(M.row, M.col, M.data)]

    lines = [f"vars {prog.n}"]
    nz = np.flatnonzero(prog.c)
    lines.append(f"obj {nz.size}")
    lines += [f"{j} {float(prog.c[j])!r}" for j in nz]
    for tag, A, b in (("eq", prog.A_eq, prog.b_eq), ("ub", prog.A_ub, prog.b_ub)):
        t = triples(A)
        lines.append(f"{tag} {A.shape[0]} {len(t)}")
        lines += t
        lines.append("rhs " + " ".join(repr(float(v)) for v in b))
    lines.append("lb " + " ".join(repr(float(v)) for v in prog.lb))
    lines.append(f"socs {len(prog.soc)}")
    for blk in prog.soc:
        t = triples(blk.G)
        lines.append(f"soc {blk.G.shape[0]} {len(t)} {float(blk.g)!r}")
        lines += t
        lines.append("h " + " ".join(repr(float(v)) for v in blk.h))
        fz = np.flatnonzero(blk.f)
        lines.append(f"f {fz.size}")
        lines += [f"{j} {float(blk.f[j])!r}" for j in fz]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_program(path) -> ConicProgram:
    with open(path, encoding="utf-8") as fh:
        it = iter(fh.read().splitlines())

    def header(tag):
        parts = next(it).split()
        if parts[0] != tag:
            raise ValueError(f"expected {tag!r} section, got {parts[0]!r}")
        return parts[1:]

    def vec(tag):
        parts = next(it).split()
        if parts[0] != tag:
            raise ValueError(f"expected {tag!r} line")
        return np.array([float(v) for v in parts[1:]])

    def matrix(rows, k):
        ijv = [next(it).split() for _ in range(k)]
        i = [int(r[0]) for r in ijv]
        j = [int(r[1]) for r in ijv]
        v = [float(r[2]) for r in ijv]
        return sp.csr_matrix((v, (i, j)), shape=(rows, n))

    n = int(header("vars")[0])
    c = np.zeros(n)
    for _ in range(int(header("obj")[0])):
        j, v = next(it).split()
        c[int(j)] = float(v)
    m, k = map(int, header("eq"))
    A_eq = matrix(m, k)
    b_eq = vec("rhs")
    m, k = map(int, header("ub"))
    A_ub = matrix(m, k)
    b_ub = vec("rhs")
    lb = vec("lb")
    socs = []
    for _ in range(int(header("socs")[0])):
        rows, k, g = header("soc")
        G = matrix(int(rows), int(k))
        h = vec("h")
        f = np.zeros(n)
        for _ in range(int(header("f")[0])):
            j, v = next(it).split()
            f[int(j)] = float(v)
        socs.append(SOCBlock(G, h, f, float(g)))
    return ConicProgram(c, A_eq, b_eq, A_ub, b_ub, socs, lb)
