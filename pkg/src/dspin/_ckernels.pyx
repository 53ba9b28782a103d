# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled SU(2) product kernels. Same contracts as ``_pykernels``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, sqrt

cnp.import_array()


cdef inline void _factor(double wx, double wy, double wz, double* f) noexcept nogil:
    cdef double ang = sqrt(wx * wx + wy * wy + wz * wz)
    cdef double half = 0.5 * ang
    cdef double scale
    if ang < 1e-8:
        # sin(h)/ang series, exact to double precision below 1e-8
        scale = 0.5 - ang * ang / 48.0
    else:
        scale = sin(half) / ang
    f[0] = cos(half)
    f[1] = scale * wx
    f[2] = scale * wy
    f[3] = scale * wz


cdef inline void _lmul(const double* a, double* q) noexcept nogil:
    # q <- a * q
    cdef double w = a[0] * q[0] - a[1] * q[1] - a[2] * q[2] - a[3] * q[3]
    cdef double x = a[0] * q[1] + q[0] * a[1] - (a[2] * q[3] - a[3] * q[2])
    cdef double y = a[0] * q[2] + q[0] * a[2] - (a[3] * q[1] - a[1] * q[3])
    cdef double z = a[0] * q[3] + q[0] * a[3] - (a[1] * q[2] - a[2] * q[1])
    q[0] = w
    q[1] = x
    q[2] = y
    q[3] = z


cdef inline void _renorm(double* q) noexcept nogil:
    cdef double nrm = sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    q[0] /= nrm
    q[1] /= nrm
    q[2] /= nrm
    q[3] /= nrm


def chain_product(rotvecs):
    cdef const double[:, ::1] w = np.ascontiguousarray(rotvecs, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = w.shape[0]
    cdef Py_ssize_t j
    cdef double q[4]
    cdef double f[4]
    q[0] = 1.0
    q[1] = 0.0
    q[2] = 0.0
    q[3] = 0.0
    with nogil:
        for j in range(n):
            _factor(w[j, 0], w[j, 1], w[j, 2], f)
            _lmul(f, q)
            if (j & 1023) == 1023:
                _renorm(q)
        _renorm(q)
    return np.array([q[0], q[1], q[2], q[3]])


def cumulative_product(rotvecs):
    cdef const double[:, ::1] w = np.ascontiguousarray(rotvecs, dtype=np.float64).reshape(-1, 3)
    cdef Py_ssize_t n = w.shape[0]
    out_arr = np.empty((n + 1, 4), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t j
    cdef double q[4]
    cdef double f[4]
    q[0] = 1.0
    q[1] = 0.0
    q[2] = 0.0
    q[3] = 0.0
    with nogil:
        out[0, 0] = 1.0
        out[0, 1] = 0.0
        out[0, 2] = 0.0
        out[0, 3] = 0.0
        for j in range(n):
            _factor(w[j, 0], w[j, 1], w[j, 2], f)
            _lmul(f, q)
            if (j & 1023) == 1023:
                _renorm(q)
            out[j + 1, 0] = q[0]
            out[j + 1, 1] = q[1]
            out[j + 1, 2] = q[2]
            out[j + 1, 3] = q[3]
    return out_arr
