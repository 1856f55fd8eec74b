# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: five-point flux matvec, preconditioned CG, 2x2 max pool.

Semantics match eitdsm.kernels_numpy exactly (same algorithm, same update
order); floating point results may differ in the last bits because dot
products here accumulate in plain loop order.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def fv_matvec(double[:, ::1] cx, double[:, ::1] cy, double[:, ::1] u):
    cdef Py_ssize_t n2 = u.shape[0]
    cdef Py_ssize_t n1 = u.shape[1]
    out_arr = np.zeros((n2, n1), dtype=np.float64)
    cdef double[:, ::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double t
    for j in range(n2):
        for i in range(n1 - 1):
            t = cx[j, i] * (u[j, i] - u[j, i + 1])
            out[j, i] += t
            out[j, i + 1] -= t
    for j in range(n2 - 1):
        for i in range(n1):
            t = cy[j, i] * (u[j, i] - u[j + 1, i])
            out[j, i] += t
            out[j + 1, i] -= t
    return out_arr


cdef double _matvec_dot(double[:, ::1] cx, double[:, ::1] cy,
                        double[:, ::1] p, double[:, ::1] ap) nogil:
    """ap = A p for the five-point operator; returns p.ap."""
    cdef Py_ssize_t n2 = p.shape[0]
    cdef Py_ssize_t n1 = p.shape[1]
    cdef Py_ssize_t i, j
    cdef double t, acc = 0.0
    for j in range(n2):
        for i in range(n1):
            ap[j, i] = 0.0
    for j in range(n2):
        for i in range(n1 - 1):
            t = cx[j, i] * (p[j, i] - p[j, i + 1])
            ap[j, i] += t
            ap[j, i + 1] -= t
    for j in range(n2 - 1):
        for i in range(n1):
            t = cy[j, i] * (p[j, i] - p[j + 1, i])
            ap[j, i] += t
            ap[j + 1, i] -= t
    for j in range(n2):
        for i in range(n1):
            acc += p[j, i] * ap[j, i]
    return acc


def cg_solve(double[:, ::1] cx, double[:, ::1] cy, cnp.ndarray b_arr,
             double[:, ::1] inv_diag, double[:, ::1] active,
             double tol, long max_iter):
    cdef Py_ssize_t n2 = b_arr.shape[0]
    cdef Py_ssize_t n1 = b_arr.shape[1]
    cdef double[:, ::1] b = b_arr
    x_arr = np.zeros((n2, n1), dtype=np.float64)
    cdef double[:, ::1] x = x_arr
    cdef Py_ssize_t i, j
    cdef double b_norm = 0.0, n_active = 0.0
    for j in range(n2):
        for i in range(n1):
            b_norm += b[j, i] * b[j, i]
            n_active += active[j, i]
    b_norm = sqrt(b_norm)
    if b_norm == 0.0:
        return x_arr, 0, 0.0

    r_arr = np.array(b_arr, dtype=np.float64, copy=True)
    z_arr = np.empty((n2, n1), dtype=np.float64)
    p_arr = np.empty((n2, n1), dtype=np.float64)
    ap_arr = np.empty((n2, n1), dtype=np.float64)
    cdef double[:, ::1] r = r_arr
    cdef double[:, ::1] z = z_arr
    cdef double[:, ::1] p = p_arr
    cdef double[:, ::1] ap = ap_arr

    cdef double rz = 0.0, rz_new, alpha, beta, pap, rel = 1.0, rnorm, drift
    cdef long it = 0
    for j in range(n2):
        for i in range(n1):
            z[j, i] = inv_diag[j, i] * r[j, i]
            p[j, i] = z[j, i]
            rz += r[j, i] * z[j, i]

    with nogil:
        for it in range(1, max_iter + 1):
            pap = _matvec_dot(cx, cy, p, ap)
            if pap <= 0.0:
                break
            alpha = rz / pap
            rnorm = 0.0
            for j in range(n2):
                for i in range(n1):
                    x[j, i] += alpha * p[j, i]
                    r[j, i] -= alpha * ap[j, i]
            if it % 128 == 0:
                drift = 0.0
                for j in range(n2):
                    for i in range(n1):
                        drift += r[j, i] * active[j, i]
                drift /= n_active
                for j in range(n2):
                    for i in range(n1):
                        r[j, i] -= active[j, i] * drift
            for j in range(n2):
                for i in range(n1):
                    rnorm += r[j, i] * r[j, i]
            rel = sqrt(rnorm) / b_norm
            if rel <= tol:
                break
            rz_new = 0.0
            for j in range(n2):
                for i in range(n1):
                    z[j, i] = inv_diag[j, i] * r[j, i]
                    rz_new += r[j, i] * z[j, i]
            beta = rz_new / rz
            rz = rz_new
            for j in range(n2):
                for i in range(n1):
                    p[j, i] = z[j, i] + beta * p[j, i]
    return x_arr, int(it), float(rel)


def maxpool2_fwd(double[:, :, :, ::1] x):
    cdef Py_ssize_t b = x.shape[0]
    cdef Py_ssize_t h = x.shape[1]
    cdef Py_ssize_t w = x.shape[2]
    cdef Py_ssize_t c = x.shape[3]
    cdef Py_ssize_t hh = h // 2
    cdef Py_ssize_t wh = w // 2
    y_arr = np.empty((b, hh, wh, c), dtype=np.float64)
    arg_arr = np.empty((b, hh, wh, c), dtype=np.int32)
    cdef double[:, :, :, ::1] y = y_arr
    cdef int[:, :, :, ::1] arg = arg_arr
    cdef Py_ssize_t n, j, i, k
    cdef double v, best
    cdef int sel
    for n in range(b):
        for j in range(hh):
            for i in range(wh):
                for k in range(c):
                    best = x[n, 2 * j, 2 * i, k]
                    sel = 0
                    v = x[n, 2 * j, 2 * i + 1, k]
                    if v > best:
                        best = v
                        sel = 1
                    v = x[n, 2 * j + 1, 2 * i, k]
                    if v > best:
                        best = v
                        sel = 2
                    v = x[n, 2 * j + 1, 2 * i + 1, k]
                    if v > best:
                        best = v
                        sel = 3
                    y[n, j, i, k] = best
                    arg[n, j, i, k] = sel
    return y_arr, arg_arr


def maxpool2_bwd(double[:, :, :, ::1] gy, int[:, :, :, ::1] arg):
    cdef Py_ssize_t b = gy.shape[0]
    cdef Py_ssize_t hh = gy.shape[1]
    cdef Py_ssize_t wh = gy.shape[2]
    cdef Py_ssize_t c = gy.shape[3]
    gx_arr = np.zeros((b, 2 * hh, 2 * wh, c), dtype=np.float64)
    cdef double[:, :, :, ::1] gx = gx_arr
    cdef Py_ssize_t n, j, i, k
    cdef int sel
    for n in range(b):
        for j in range(hh):
            for i in range(wh):
                for k in range(c):
                    sel = arg[n, j, i, k]
                    gx[n, 2 * j + (sel >> 1), 2 * i + (sel & 1), k] += gy[n, j, i, k]
    return gx_arr
