# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels; see ``_kernels_py`` for the reference semantics."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef double complex cplx


cdef inline void _fwht(cplx* v, Py_ssize_t d) noexcept nogil:
    cdef Py_ssize_t h = 1, i, j
    cdef cplx a, b
    while h < d:
        i = 0
        while i < d:
            for j in range(i, i + h):
                a = v[j]
                b = v[j + h]
                v[j] = a + b
                v[j + h] = a - b
            i += 2 * h
        h *= 2


def fwht(cplx[:, ::1] v not None):
    out = np.array(v, dtype=np.complex128, order="C")
    cdef cplx[:, ::1] o = out
    cdef Py_ssize_t i
    for i in range(o.shape[0]):
        _fwht(&o[i, 0], o.shape[1])
    return out


def hamming_form(pa, pb, int n_qubits):
    cdef double[:, ::1] a = np.ascontiguousarray(pa, dtype=np.float64)
    cdef double[:, ::1] b = np.ascontiguousarray(pb, dtype=np.float64)
    cdef Py_ssize_t n = b.shape[0], d = b.shape[1]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] res = out
    cdef double[::1] q = np.empty(d, dtype=np.float64)
    cdef Py_ssize_t i, s, h, blk, j
    cdef double x, y, acc
    with nogil:
        for i in range(n):
            for s in range(d):
                q[s] = b[i, s]
            h = 1
            while h < d:
                blk = 0
                while blk < d:
                    for j in range(blk, blk + h):
                        x = q[j]
                        y = q[j + h]
                        q[j] = x - 0.5 * y
                        q[j + h] = y - 0.5 * x
                    blk += 2 * h
                h *= 2
            acc = 0.0
            for s in range(d):
                acc += a[i, s] * q[s]
            res[i] = d * acc
    return out


def apply_local(vecs, factors):
    out = np.array(vecs, dtype=np.complex128, order="C")
    cdef cplx[:, ::1] v = out
    cdef cplx[:, :, ::1] u = np.ascontiguousarray(factors, dtype=np.complex128)
    cdef Py_ssize_t r = v.shape[0], d = v.shape[1], nq = u.shape[0]
    cdef Py_ssize_t i, k, stride, blk, j
    cdef cplx a, b, u00, u01, u10, u11
    with nogil:
        for i in range(r):
            for k in range(nq):
                stride = d >> (k + 1)
                u00 = u[k, 0, 0]
                u01 = u[k, 0, 1]
                u10 = u[k, 1, 0]
                u11 = u[k, 1, 1]
                blk = 0
                while blk < d:
                    for j in range(blk, blk + stride):
                        a = v[i, j]
                        b = v[i, j + stride]
                        v[i, j] = u00 * a + u01 * b
                        v[i, j + stride] = u10 * a + u11 * b
                    blk += 2 * stride
    return out


cdef inline void _apply_scaled(
    cplx* x, cplx* y, cplx* tmp, double* diag, double* xspec,
    double c, double inv_r, Py_ssize_t d,
) noexcept nogil:
    # y = ((diag * x + W xspec W x / d) - c x) / r
    cdef Py_ssize_t s
    cdef double inv_d = 1.0 / d
    for s in range(d):
        tmp[s] = x[s]
    _fwht(tmp, d)
    for s in range(d):
        tmp[s] = tmp[s] * xspec[s]
    _fwht(tmp, d)
    for s in range(d):
        y[s] = ((diag[s] - c) * x[s] + tmp[s] * inv_d) * inv_r


def evolve_chebyshev(vecs, diags, xspec, centers, halfwidths, coeffs, nterms):
    out = np.array(vecs, dtype=np.complex128, order="C")
    cdef cplx[:, ::1] v = out
    cdef double[:, ::1] dg = np.ascontiguousarray(diags, dtype=np.float64)
    cdef double[::1] xs = np.ascontiguousarray(xspec, dtype=np.float64)
    cdef double[::1] cs = np.ascontiguousarray(centers, dtype=np.float64)
    cdef double[::1] hw = np.ascontiguousarray(halfwidths, dtype=np.float64)
    cdef cplx[:, ::1] co = np.ascontiguousarray(coeffs, dtype=np.complex128)
    cdef long[::1] nt = np.ascontiguousarray(nterms, dtype=np.int_)
    cdef Py_ssize_t r = v.shape[0], d = v.shape[1], nseg = dg.shape[0]
    work = np.empty((4, d), dtype=np.complex128)
    cdef cplx[:, ::1] w = work
    cdef cplx* t_prev
    cdef cplx* t_cur
    cdef cplx* t_next
    cdef cplx* swap
    cdef cplx* tmp = &w[3, 0]
    cdef Py_ssize_t i, m, k, s
    cdef double c, inv_r
    cdef cplx ck
    with nogil:
        for i in range(r):
            for m in range(nseg):
                c = cs[m]
                inv_r = 1.0 / hw[m]
                t_prev = &w[0, 0]
                t_cur = &w[1, 0]
                t_next = &w[2, 0]
                for s in range(d):
                    t_prev[s] = v[i, s]
                _apply_scaled(t_prev, t_cur, tmp, &dg[m, 0], &xs[0], c, inv_r, d)
                for s in range(d):
                    v[i, s] = co[m, 0] * t_prev[s] + co[m, 1] * t_cur[s]
                for k in range(2, nt[m]):
                    _apply_scaled(t_cur, t_next, tmp, &dg[m, 0], &xs[0], c, inv_r, d)
                    ck = co[m, k]
                    for s in range(d):
                        t_next[s] = 2.0 * t_next[s] - t_prev[s]
                        v[i, s] = v[i, s] + ck * t_next[s]
                    swap = t_prev
                    t_prev = t_cur
                    t_cur = t_next
                    t_next = swap
    return out
