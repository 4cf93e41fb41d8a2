"""Pure-numpy kernels; reference behaviour for the compiled ``_kernels`` module."""
import numpy as np


def point_queue(counts, capacity):
    """Batched FCFS point-queue recursion.

    counts: (R, T) arrivals per slot; capacity: (T,) service per slot.
    Returns (R, T) departures per slot.
    """
    counts = np.ascontiguousarray(counts, dtype=np.float64)
    capacity = np.ascontiguousarray(capacity, dtype=np.float64)
    R, T = counts.shape
    out = np.empty((R, T))
    queue = np.zeros(R)
    for t in range(T):
        load = queue + counts[:, t]
        served = np.minimum(load, capacity[t])
        out[:, t] = served
        queue = load - served
    return out


def realized_pmf(x, alpha, beta, literal=False):
    """Per-flight arrival pmf under sampled compliance, window-aligned (N, M).

    Compliers land in their recommended slot; the rest follow ``beta``.
    With ``literal`` the non-complier mass uses alpha instead of (1 - alpha)
    and the rows are left unnormalized.
    """
    x = np.asarray(x, dtype=np.float64)
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    stray = alpha if literal else 1.0 - alpha
    return x * alpha + beta * (x * stray).sum(axis=1, keepdims=True)
