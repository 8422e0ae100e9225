# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled sampling kernels; same contracts as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, sqrt, cos, pow, fabs, M_PI

cnp.import_array()

__all__ = ["BACKEND", "eval_power_sum", "invert_power_sum", "box_muller", "ks_uniform_stat"]

BACKEND = "cython"

cdef int MAX_ITER = 200
cdef double VTOL = 1e-14


def eval_power_sum(coefs, exps, x):
    cdef double[::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef double[::1] e = np.ascontiguousarray(exps, dtype=np.float64)
    xa = np.ascontiguousarray(x, dtype=np.float64)
    out = np.zeros_like(xa)
    cdef double[::1] xv = xa.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, j, n = xv.shape[0], k = c.shape[0]
    cdef double acc
    with nogil:
        for i in range(n):
            acc = 0.0
            for j in range(k):
                acc = acc + c[j] * pow(xv[i], e[j])
            ov[i] = acc
    return out


cdef double _solve_one(double[::1] logc, double[::1] e, Py_ssize_t k, double log_t) noexcept nogil:
    cdef double lo = 1e308, hi = 1e308, v, vn, amax, s, sw, a, f, fp, w, logk = log(<double>k)
    cdef Py_ssize_t j, it
    for j in range(k):
        a = (log_t - logc[j]) / e[j]
        if a < hi:
            hi = a
        a = (log_t - logk - logc[j]) / e[j]
        if a < lo:
            lo = a
    v = hi
    for it in range(MAX_ITER):
        amax = -1e308
        for j in range(k):
            a = logc[j] + e[j] * v
            if a > amax:
                amax = a
        s = 0.0
        sw = 0.0
        for j in range(k):
            w = exp(logc[j] + e[j] * v - amax)
            s += w
            sw += w * e[j]
        f = amax + log(s) - log_t
        if f == 0.0:
            return v
        fp = sw / s
        if f < 0.0:
            lo = v
        else:
            hi = v
        vn = v - f / fp
        if vn <= lo or vn >= hi:
            vn = 0.5 * (lo + hi)
        if fabs(vn - v) <= VTOL * (fabs(v) if fabs(v) > 1.0 else 1.0):
            return vn
        v = vn
    return v


def invert_power_sum(coefs, exps, targets):
    cdef double[::1] c = np.ascontiguousarray(coefs, dtype=np.float64)
    cdef double[::1] e = np.ascontiguousarray(exps, dtype=np.float64)
    ta = np.ascontiguousarray(targets, dtype=np.float64)
    out = np.zeros_like(ta)
    cdef double[::1] tv = ta.reshape(-1)
    cdef double[::1] ov = out.reshape(-1)
    cdef Py_ssize_t i, j, n = tv.shape[0], k = c.shape[0]
    logc_arr = np.log(np.asarray(c))
    cdef double[::1] logc = logc_arr
    with nogil:
        for i in range(n):
            if tv[i] <= 0.0:
                ov[i] = 0.0
            elif k == 1:
                ov[i] = pow(tv[i] / c[0], 1.0 / e[0])
            else:
                ov[i] = exp(_solve_one(logc, e, k, log(tv[i])))
    return out


def box_muller(u1, u2):
    cdef double[::1] a = np.ascontiguousarray(u1, dtype=np.float64).reshape(-1)
    cdef double[::1] b = np.ascontiguousarray(u2, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t i, n = a.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = sqrt(-2.0 * log1p(-a[i])) * cos(2.0 * M_PI * b[i])
    return out


def ks_uniform_stat(u_sorted):
    cdef double[::1] u = np.ascontiguousarray(u_sorted, dtype=np.float64).reshape(-1)
    cdef Py_ssize_t i, n = u.shape[0]
    cdef double d = 0.0, dn, x
    if n == 0:
        return 0.0
    dn = <double>n
    with nogil:
        for i in range(n):
            x = (i + 1) / dn - u[i]
            if x > d:
                d = x
            x = u[i] - i / dn
            if x > d:
                d = x
    return d
