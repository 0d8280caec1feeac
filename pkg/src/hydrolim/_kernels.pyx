# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled O(N^2) pair kernels for the power-law interaction.

Every kernel accumulates per particle i sequentially in ascending j, so the
result is bit-identical for any OpenMP thread count (threads never share an
accumulator).  The power-law pair force on particle i from particle j is
(1/sigma) * (r/sigma)^(-p) * (x_i - x_j)/r with r = |x_i - x_j|.
"""

from cython.parallel cimport prange
from libc.math cimport INFINITY, pow, sqrt

import numpy as np

BACKEND_NAME = "compiled"


def accel_power_law(const double[:, ::1] pos, double sigma, double p, int num_threads):
    """Accelerations plus the minimum pair distance in one pass.

    Returns (acc (n,3), min_dist).  min_dist == 0.0 signals a coincident
    pair; the affected accelerations are then meaningless.
    """
    cdef Py_ssize_t n = pos.shape[0]
    acc_arr = np.empty((n, 3), dtype=np.float64)
    min_arr = np.empty(n, dtype=np.float64)
    cdef double[:, ::1] acc = acc_arr
    cdef double[::1] mind = min_arr
    cdef double sp = pow(sigma, p - 1.0)
    cdef int fast2 = 1 if p == 2.0 else 0
    cdef Py_ssize_t i, j
    cdef double xi, yi, zi, dx, dy, dz, r2, r, s, ax, ay, az, m
    with nogil:
        for i in prange(n, schedule="static", num_threads=num_threads):
            xi = pos[i, 0]
            yi = pos[i, 1]
            zi = pos[i, 2]
            ax = 0.0
            ay = 0.0
            az = 0.0
            m = INFINITY
            for j in range(n):
                if j == i:
                    continue
                dx = xi - pos[j, 0]
                dy = yi - pos[j, 1]
                dz = zi - pos[j, 2]
                r2 = dx * dx + dy * dy + dz * dz
                r = sqrt(r2)
                if r < m:
                    m = r
                if r > 0.0:
                    if fast2:
                        s = sp / (r2 * r)
                    else:
                        s = sp * pow(r, -(p + 1.0))
                    ax = ax + s * dx
                    ay = ay + s * dy
                    az = az + s * dz
            acc[i, 0] = ax
            acc[i, 1] = ay
            acc[i, 2] = az
            mind[i] = m
    return acc_arr, float(min_arr.min())


def min_pair_distance(const double[:, ::1] pos, int num_threads):
    """Minimum over unordered pairs of |x_i - x_j| (0.0 on coincidence)."""
    cdef Py_ssize_t n = pos.shape[0]
    min_arr = np.full(n, np.inf, dtype=np.float64)
    cdef double[::1] mind = min_arr
    cdef Py_ssize_t i, j
    cdef double xi, yi, zi, dx, dy, dz, r2, m
    with nogil:
        for i in prange(n - 1, schedule="static", num_threads=num_threads):
            xi = pos[i, 0]
            yi = pos[i, 1]
            zi = pos[i, 2]
            m = INFINITY
            for j in range(i + 1, n):
                dx = xi - pos[j, 0]
                dy = yi - pos[j, 1]
                dz = zi - pos[j, 2]
                r2 = dx * dx + dy * dy + dz * dz
                if r2 < m:
                    m = r2
            mind[i] = m
    return float(sqrt(min_arr.min()))


def pair_potential_sums_power_law(const double[:, ::1] pos, double sigma, double p, int num_threads):
    """Per-particle sums over j != i of Phi(|x_i - x_j|/sigma), Phi(q) = q^(1-p)/(p-1).

    The ordered-pair total is the numpy sum of the returned array; each
    unordered pair contributes twice.
    """
    cdef Py_ssize_t n = pos.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double inv_pm1 = 1.0 / (p - 1.0)
    cdef int fast2 = 1 if p == 2.0 else 0
    cdef Py_ssize_t i, j
    cdef double xi, yi, zi, dx, dy, dz, r2, r, acc
    with nogil:
        for i in prange(n, schedule="static", num_threads=num_threads):
            xi = pos[i, 0]
            yi = pos[i, 1]
            zi = pos[i, 2]
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                dx = xi - pos[j, 0]
                dy = yi - pos[j, 1]
                dz = zi - pos[j, 2]
                r2 = dx * dx + dy * dy + dz * dz
                r = sqrt(r2)
                if fast2:
                    acc = acc + sigma / r
                else:
                    acc = acc + pow(r / sigma, 1.0 - p) * inv_pm1
            out[i] = acc
    return out_arr


def force_sums_power_law(const double[:, ::1] pos, double sigma, double p, int num_threads):
    """Per-particle certificate sums sigma^(p-1) * sum_{j != i} |x_i - x_j|^(-p).

    This equals -(1/sigma) * sum_{j != i} Phi'(|x_i - x_j|/sigma) for the
    power law, the quantity the interaction-scale condition bounds by B_N.
    """
    cdef Py_ssize_t n = pos.shape[0]
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double sp = pow(sigma, p - 1.0)
    cdef int fast2 = 1 if p == 2.0 else 0
    cdef Py_ssize_t i, j
    cdef double xi, yi, zi, dx, dy, dz, r2, acc
    with nogil:
        for i in prange(n, schedule="static", num_threads=num_threads):
            xi = pos[i, 0]
            yi = pos[i, 1]
            zi = pos[i, 2]
            acc = 0.0
            for j in range(n):
                if j == i:
                    continue
                dx = xi - pos[j, 0]
                dy = yi - pos[j, 1]
                dz = zi - pos[j, 2]
                r2 = dx * dx + dy * dy + dz * dz
                if fast2:
                    acc = acc + sp / r2
                else:
                    acc = acc + sp * pow(sqrt(r2), -p)
            out[i] = acc
    return out_arr
