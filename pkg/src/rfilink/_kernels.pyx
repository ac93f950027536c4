# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loops; the pure-Python twins live in ``_kernels_py``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt

cnp.import_array()


def lfsr_bits(int order, int tap, unsigned long long seed, Py_ssize_t n):
    cdef unsigned long long state = seed
    cdef unsigned long long mask = (1ULL << order) - 1ULL
    cdef unsigned long long fb
    cdef Py_ssize_t i
    out = np.empty(n, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    for i in range(n):
        fb = ((state >> (order - 1)) ^ (state >> (tap - 1))) & 1ULL
        state = ((state << 1) | fb) & mask
        o[i] = <cnp.uint8_t>fb
    return out


cdef inline double _nearest(const double[::1] levels, double v) noexcept nogil:
    cdef Py_ssize_t i, best = 0
    cdef double d, dbest = fabs(v - levels[0])
    for i in range(1, levels.shape[0]):
        d = fabs(v - levels[i])
        if d < dbest:
            dbest = d
            best = i
    return levels[best]


cdef inline double _abs2(double complex z) noexcept nogil:
    return z.real * z.real + z.imag * z.imag


def dfe_equalize(const double complex[::1] x,
                 double complex[::1] ffe,
                 double complex[::1] dfe,
                 Py_ssize_t ffe_cursor,
                 double mu,
                 const double complex[::1] ref,
                 Py_ssize_t n_train,
                 const double[::1] levels_i,
                 const double[::1] levels_q,
                 double tap_limit):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t nf = ffe.shape[0]
    cdef Py_ssize_t nb = dfe.shape[0]
    cdef bint has_q = levels_q.shape[0] > 0
    cdef double lim2 = tap_limit * tap_limit
    cdef Py_ssize_t k, j, idx, diverged_at = -1
    cdef double complex acc, dec, r, e
    cdef bint adapt = mu > 0.0

    y_arr = np.empty(n, dtype=np.complex128)
    dec_arr = np.empty(n, dtype=np.complex128)
    err_arr = np.empty(n, dtype=np.complex128)
    fb_arr = np.zeros(n, dtype=np.complex128)
    cdef double complex[::1] y = y_arr
    cdef double complex[::1] dd = dec_arr
    cdef double complex[::1] err = err_arr
    cdef double complex[::1] fb = fb_arr

    with nogil:
        for k in range(n):
            acc = 0
            for j in range(nf):
                idx = k + j - ffe_cursor
                if 0 <= idx < n:
                    acc = acc + ffe[j] * x[idx]
            for j in range(nb):
                idx = k - 1 - j
                if idx >= 0:
                    acc = acc - dfe[j] * fb[idx]
            y[k] = acc
            if has_q:
                dec = _nearest(levels_i, acc.real) + 1j * _nearest(levels_q, acc.imag)
            else:
                dec = _nearest(levels_i, acc.real)
            dd[k] = dec
            r = ref[k] if k < n_train else dec
            fb[k] = r
            e = r - acc
            err[k] = e
            if adapt:
                for j in range(nf):
                    idx = k + j - ffe_cursor
                    if 0 <= idx < n:
                        ffe[j] = ffe[j] + mu * e * x[idx].conjugate()
                        if _abs2(ffe[j]) > lim2 or ffe[j] != ffe[j]:
                            diverged_at = k
                for j in range(nb):
                    idx = k - 1 - j
                    if idx >= 0:
                        dfe[j] = dfe[j] - mu * e * fb[idx].conjugate()
                        if _abs2(dfe[j]) > lim2 or dfe[j] != dfe[j]:
                            diverged_at = k
                if diverged_at >= 0:
                    adapt = False
    return y_arr, dec_arr, err_arr, diverged_at
