"""Index bookkeeping between (flight, slot) matrices, window-aligned arrays and LP variables.

Window-aligned arrays are (N, W) with W = the longest window; column j of
flight i is slot ``dep_i - W + j``, i.e. lead ``W - j`` slots. Columns outside
a shorter window are padding and always zero.
"""
from __future__ import annotations

import numpy as np

from .leadtime import beta_table
from .timegrid import Schedule


class VarIndex:
    """Maps each in-window (flight, slot) pair to one LP column."""

    def __init__(self, schedule: Schedule):
        self.schedule = schedule
        lens = np.array([f.window_len for f in schedule.flights], dtype=int)
        self.offsets = np.concatenate([[0], np.cumsum(lens)])
        self.n = int(self.offsets[-1])
        self.flight = np.repeat(np.arange(len(schedule)), lens)
        starts = np.array([f.dep - f.window_len for f in schedule.flights], dtype=int)
        self.slot = np.concatenate([np.arange(s, s + m) for s, m in zip(starts, lens)]) if lens.size else np.zeros(0, int)

    def column(self, i: int, t: int) -> int:
        f = self.schedule.flights[i]
        if not f.dep - f.window_len <= t < f.dep:
            return -1
        return int(self.offsets[i] + t - (f.dep - f.window_len))

    def to_matrix(self, v) -> np.ndarray:
        out = np.zeros((len(self.schedule), self.schedule.grid.num_slots))
        out[self.flight, self.slot] = v
        return out

    def from_matrix(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float)[self.flight, self.slot]


def _index(schedule: Schedule, W: int):
    deps = schedule.deps
    cols = deps[:, None] - W + np.arange(W)[None, :]
    lens = np.array([f.window_len for f in schedule.flights], dtype=int)
    valid = np.arange(W)[None, :] >= (W - lens)[:, None]
    return cols, valid


def gather(schedule: Schedule, mat) -> np.ndarray:
    """(N, T) -> (N, W) window-aligned copy."""
    W = schedule.max_window
    mat = np.asarray(mat, dtype=float)
    cols, valid = _index(schedule, W)
    rows = np.broadcast_to(np.arange(len(schedule))[:, None], cols.shape)
    out = np.zeros(cols.shape)
    out[valid] = mat[rows[valid], cols[valid]]
    return out


def scatter(schedule: Schedule, win) -> np.ndarray:
    """(N, W) window-aligned -> (N, T), zero outside windows."""
    W = schedule.max_window
    cols, valid = _index(schedule, W)
    rows = np.broadcast_to(np.arange(len(schedule))[:, None], cols.shape)
    out = np.zeros((len(schedule), schedule.grid.num_slots))
    out[rows[valid], cols[valid]] = np.asarray(win)[valid]
    return out


def beta_windows(schedule: Schedule, beta) -> np.ndarray:
    """Lead-time masses laid out window-aligned: column j holds beta at lead W - j."""
    W = schedule.max_window
    out = np.zeros((len(schedule), W))
    for i, masses in enumerate(beta_table(schedule.flights, beta)):
        m = masses.size
        out[i, W - m:] = masses[::-1]
    return out


def beta_matrix(schedule: Schedule, beta) -> np.ndarray:
    """(N, T) matrix of beta_i(t): mass at lead dep_i - t, zero outside the window."""
    return scatter(schedule, beta_windows(schedule, beta))
