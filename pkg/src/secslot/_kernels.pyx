# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels; must agree exactly with ``_kernels_py``."""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def point_queue(counts, capacity):
    cdef const double[:, ::1] c = np.ascontiguousarray(counts, dtype=np.float64)
    cdef const double[::1] cap = np.ascontiguousarray(capacity, dtype=np.float64)
    cdef Py_ssize_t R = c.shape[0], T = c.shape[1], r, t
    out_arr = np.empty((R, T), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double queue, load, served
    for r in range(R):
        queue = 0.0
        for t in range(T):
            load = queue + c[r, t]
            served = load if load < cap[t] else cap[t]
            out[r, t] = served
            queue = load - served
    return out_arr


def realized_pmf(x, alpha, beta, bint literal=False):
    cdef const double[:, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef const double[:, ::1] av = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef const double[:, ::1] bv = np.ascontiguousarray(beta, dtype=np.float64)
    cdef Py_ssize_t N = xv.shape[0], M = xv.shape[1], i, j
    out_arr = np.empty((N, M), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef double stray
    for i in range(N):
        stray = 0.0
        for j in range(M):
            if literal:
                stray += xv[i, j] * av[i, j]
            else:
                stray += xv[i, j] * (1.0 - av[i, j])
        for j in range(M):
            out[i, j] = xv[i, j] * av[i, j] + bv[i, j] * stray
    return out_arr
