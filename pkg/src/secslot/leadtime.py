"""No-control lead-time law (skew normal) and its per-slot discretization."""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .timegrid import TimeGrid

MAX_LEAD_MINUTES = 240.0
_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


class LeadTimeError(ValueError):
    pass


class TruncationWarning(UserWarning):
    """Most of the lead-time density falls outside the recommendation window."""


@dataclass(frozen=True)
class SkewNormalParams:
    location: float = 64.0
    scale: float = 30.0
    shape: float = 3.0

    def __post_init__(self):
        if not self.scale > 0:
            raise LeadTimeError("scale must be positive")


@dataclass(frozen=True, eq=False)
class BetaVector:
    """Lead-time pmf per slot: ``masses[k-1]`` is the mass k slots before departure."""

    masses: np.ndarray

    def __post_init__(self):
        m = np.array(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise LeadTimeError("masses must be a nonempty vector")
        if np.any(m < 0):
            raise LeadTimeError("masses must be nonnegative")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def M(self) -> int:
        return self.masses.size

    def __eq__(self, other):
        return isinstance(other, BetaVector) and np.array_equal(self.masses, other.masses)

    def for_window(self, window_len: int) -> np.ndarray:
        """Masses restricted (or zero-padded) to ``window_len`` slots, renormalized."""
        if window_len <= self.M:
            m = self.masses[:window_len]
        else:
            m = np.concatenate([self.masses, np.zeros(window_len - self.M)])
        s = m.sum()
        if s <= 0:
            raise LeadTimeError(f"no lead-time mass inside a {window_len}-slot window")
        return m / s


def _norm_cdf(z: float) -> float:
    return 0.5 * math.erfc(-z / _SQRT2)


def skewnormal_pdf(x: float, params: SkewNormalParams = SkewNormalParams()) -> float:
    z = (x - params.location) / params.scale
    return (2.0 / params.scale) * _INV_SQRT2PI * math.exp(-0.5 * z * z) * _norm_cdf(params.shape * z)


def _simpson(f, a, fa, b, fb):
    m = 0.5 * (a + b)
    fm = f(m)
    return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def adaptive_simpson(f, a: float, b: float, tol: float = 1e-10, max_depth: int = 50) -> float:
    """Integrate ``f`` over [a, b] by adaptive Simpson with absolute tolerance ``tol``."""
    fa, fb = f(a), f(b)
    m, fm, whole = _simpson(f, a, fa, b, fb)
    # explicit stack; each entry is one panel still to be refined
    stack = [(a, fa, b, fb, m, fm, whole, tol, max_depth)]
    total = 0.0
    while stack:
        a, fa, b, fb, m, fm, whole, eps, depth = stack.pop()
        lm, flm, left = _simpson(f, a, fa, m, fm)
        rm, frm, right = _simpson(f, m, fm, b, fb)
        delta = left + right - whole
        if depth <= 0 or abs(delta) <= 15.0 * eps:
            total += left + right + delta / 15.0
        else:
            stack.append((a, fa, m, fm, lm, flm, left, eps / 2.0, depth - 1))
            stack.append((m, fm, b, fb, rm, frm, right, eps / 2.0, depth - 1))
    return total


def slot_masses(params: SkewNormalParams, slot_minutes: float, M: int,
                tol: float = 1e-10, panels: int = 8) -> np.ndarray:
    """Untruncated density mass over each lead interval ((k-1)w, k*w], k = 1..M.

    Each interval is pre-split into ``panels`` pieces so that narrow peaks are
    not stepped over by the first Simpson estimate.
    """
    pdf = lambda x: skewnormal_pdf(x, params)  # noqa: E731
    out = np.empty(M)
    for k in range(1, M + 1):
        lo, hi = (k - 1) * slot_minutes, k * slot_minutes
        edges = np.linspace(lo, hi, panels + 1)
        out[k - 1] = sum(adaptive_simpson(pdf, edges[j], edges[j + 1], tol / panels)
                         for j in range(panels))
    return out


def discretize_leadtime(params: SkewNormalParams = SkewNormalParams(), grid: TimeGrid | None = None,
                        M: int = 16, tol: float = 1e-10) -> BetaVector:
    """Per-slot arrival mass β_k for k = 1..M, truncated to the window and renormalized.

    Keeping less than half of the density inside the window usually means the
    window sits far from the distribution's bulk; that warns. A window with no
    representable mass at all cannot be renormalized and raises.
    """
    grid = grid or TimeGrid()
    if M < 1:
        raise LeadTimeError("M must be >= 1")
    raw = slot_masses(params, grid.slot_minutes, M, tol)
    kept = raw.sum()
    if not kept > 0:
        raise LeadTimeError(f"no lead-time mass falls inside the {M}-slot window")
    if kept < 0.5:
        warnings.warn(f"only {kept:.3g} of the lead-time mass falls inside the {M}-slot window",
                      TruncationWarning, stacklevel=2)
    return BetaVector(raw / kept)


def mean_leadtime_slots(params: SkewNormalParams = SkewNormalParams(), grid: TimeGrid | None = None) -> int:
    """Mean lead time in whole slots, from the location parameter (round half up)."""
    grid = grid or TimeGrid()
    return int(math.floor(params.location / grid.slot_minutes + 0.5))


def load_beta(path, M: int | None = None) -> BetaVector:
    """Read a ``k,mass`` override file; must sum to 1 within 1e-6."""
    rows = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["k", "mass"]:
            raise LeadTimeError(f"{path}: expected header 'k,mass'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                k, mass = int(row[0]), float(row[1])
            except (ValueError, IndexError) as exc:
                raise LeadTimeError(f"{path}:{lineno}: malformed row {row!r}") from exc
            if k < 1 or (M is not None and k > M):
                raise LeadTimeError(f"{path}:{lineno}: k={k} outside 1..{M}")
            rows[k] = mass
    size = M or max(rows, default=0)
    masses = np.zeros(size)
    for k, v in rows.items():
        masses[k - 1] = v
    if abs(masses.sum() - 1.0) > 1e-6:
        raise LeadTimeError(f"{path}: masses sum to {masses.sum()!r}, expected 1")
    return BetaVector(masses / masses.sum())


def beta_table(flights, beta) -> list[np.ndarray]:
    """Per-flight lead masses. ``beta`` is one shared BetaVector or a mapping id -> BetaVector."""
    if isinstance(beta, BetaVector):
        cache = {}
        out = []
        for f in flights:
            if f.window_len not in cache:
                cache[f.window_len] = beta.for_window(f.window_len)
            out.append(cache[f.window_len])
        return out
    return [beta[f.id].for_window(f.window_len) for f in flights]
