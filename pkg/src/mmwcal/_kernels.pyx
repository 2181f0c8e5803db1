# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled PDP kernels. Must stay numerically in step with _kernels_py."""

import numpy as np

from libc.math cimport floor, sin, M_PI


cdef inline double _sinc2(double u) noexcept nogil:
    cdef double a
    if u == 0.0:
        return 1.0
    a = M_PI * u
    return (sin(a) / a) ** 2


def deposit_pulses(double[::1] offsets, double[::1] powers_mw, Py_ssize_t n_bins,
                   Py_ssize_t span):
    cdef double[::1] out
    cdef double[::1] w
    cdef Py_ssize_t i, j, k, k0, n_taps
    cdef double x, total
    result = np.zeros(n_bins, dtype=np.float64)
    out = result
    n_taps = 2 * span + 2
    w = np.empty(n_taps, dtype=np.float64)
    with nogil:
        for i in range(offsets.shape[0]):
            x = offsets[i]
            k0 = <Py_ssize_t>floor(x) - span
            total = 0.0
            for j in range(n_taps):
                w[j] = _sinc2(<double>(k0 + j) - x)
                total = total + w[j]
            for j in range(n_taps):
                k = k0 + j
                if 0 <= k < n_bins:
                    out[k] = out[k] + powers_mw[i] * w[j] / total
    return result


def first_path(double[::1] bins_mw, double threshold_mw, Py_ssize_t pulse_bins):
    cdef Py_ssize_t n = bins_mw.shape[0]
    cdef Py_ssize_t i, start = -1, peak, lo, hi
    cdef double acc = 0.0
    for i in range(n):
        if bins_mw[i] > threshold_mw:
            start = i
            break
    if start < 0:
        return -1, -1, 0.0
    peak = start
    hi = start + pulse_bins
    if hi > n - 1:
        hi = n - 1
    for i in range(start + 1, hi + 1):
        if bins_mw[i] > bins_mw[peak]:
            peak = i
    lo = peak - pulse_bins
    if lo < 0:
        lo = 0
    hi = peak + pulse_bins
    if hi > n - 1:
        hi = n - 1
    for i in range(lo, hi + 1):
        acc = acc + bins_mw[i]
    return start, peak, acc
