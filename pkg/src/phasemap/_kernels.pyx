# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled RK4 kernel for linear matrix flows.

Integrates ``dX/dtau = p(tau) P X + q(tau) X Q`` with classical RK4 on a
fixed grid. ``pw`` and ``qw`` hold the scalar weights sampled at every half
step: index ``2k`` is the grid node ``k`` and ``2k + 1`` the midpoint.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport isfinite

cnp.import_array()


cdef inline void _rhs(double[:, ::1] P, double[:, ::1] Q, double[:, ::1] X,
                      double pw, double qw, double[:, ::1] out) noexcept nogil:
    cdef Py_ssize_t n = X.shape[0], m = X.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double acc
    for i in range(n):
        for j in range(m):
            acc = 0.0
            if pw != 0.0:
                for k in range(n):
                    acc = acc + pw * P[i, k] * X[k, j]
            if qw != 0.0:
                for k in range(m):
                    acc = acc + qw * X[i, k] * Q[k, j]
            out[i, j] = acc


def rk4_linear(double[:, ::1] P, double[:, ::1] Q, double[:, ::1] X0,
               double[::1] pw, double[::1] qw, double h, Py_ssize_t steps):
    """Return ``(trajectory, bad_step)``; ``bad_step`` is -1 when all values are finite."""
    cdef Py_ssize_t n = X0.shape[0], m = X0.shape[1]
    cdef cnp.ndarray[cnp.float64_t, ndim=3] traj = np.empty((steps + 1, n, m))
    cdef double[:, :, ::1] tv = traj
    cdef double[:, ::1] x = np.array(X0, copy=True)
    cdef double[:, ::1] k1 = np.empty((n, m))
    cdef double[:, ::1] k2 = np.empty((n, m))
    cdef double[:, ::1] k3 = np.empty((n, m))
    cdef double[:, ::1] k4 = np.empty((n, m))
    cdef double[:, ::1] tmp = np.empty((n, m))
    cdef Py_ssize_t s, i, j
    cdef double half = 0.5 * h, sixth = h / 6.0
    cdef Py_ssize_t bad = -1
    with nogil:
        for i in range(n):
            for j in range(m):
                tv[0, i, j] = x[i, j]
        for s in range(steps):
            _rhs(P, Q, x, pw[2 * s], qw[2 * s], k1)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = x[i, j] + half * k1[i, j]
            _rhs(P, Q, tmp, pw[2 * s + 1], qw[2 * s + 1], k2)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = x[i, j] + half * k2[i, j]
            _rhs(P, Q, tmp, pw[2 * s + 1], qw[2 * s + 1], k3)
            for i in range(n):
                for j in range(m):
                    tmp[i, j] = x[i, j] + h * k3[i, j]
            _rhs(P, Q, tmp, pw[2 * s + 2], qw[2 * s + 2], k4)
            for i in range(n):
                for j in range(m):
                    x[i, j] = x[i, j] + sixth * (k1[i, j] + 2.0 * k2[i, j] + 2.0 * k3[i, j] + k4[i, j])
                    tv[s + 1, i, j] = x[i, j]
                    if not isfinite(x[i, j]):
                        bad = s + 1
            if bad >= 0:
                break
    return traj, bad
