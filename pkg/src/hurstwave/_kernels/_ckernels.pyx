# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the kernels in ``_pykernels``; identical semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, exp, NAN

cnp.import_array()

DEF VALID = 0
DEF DEGENERATE = 1
DEF INSUFFICIENT_DOF = 2
DEF NOISE_DOMINATES = 3

cdef double LN2 = 0.6931471805599453


def dwt_step(x, const double[::1] h, const double[::1] g):
    cdef const double[::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0], half = n // 2, taps = h.shape[0]
    cdef Py_ssize_t k, i, pos
    cdef double sa, sd, v
    a = np.empty(half)
    d = np.empty(half)
    cdef double[::1] av = a, dv = d
    with nogil:
        for k in range(half):
            sa = 0.0
            sd = 0.0
            pos = 2 * k
            for i in range(taps):
                v = xv[(pos + i) % n]
                sa += h[i] * v
                sd += g[i] * v
            av[k] = sa
            dv[k] = sd
    return a, d


def idwt_step(a, d, const double[::1] h, const double[::1] g):
    cdef const double[::1] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef const double[::1] dv = np.ascontiguousarray(d, dtype=np.float64)
    cdef Py_ssize_t half = av.shape[0], n = 2 * half, taps = h.shape[0]
    cdef Py_ssize_t k, i, pos
    out = np.zeros(n)
    cdef double[::1] ov = out
    with nogil:
        # tap-major order matches the numpy fallback's summation order
        for i in range(taps):
            for k in range(half):
                pos = (2 * k + i) % n
                ov[pos] += h[i] * av[k] + g[i] * dv[k]
    return out


cdef inline double two_prod_err(double a, double b, double p) nogil:
    # rounding error of p = fl(a * b), Dekker splitting
    cdef double ca = 134217729.0 * a, cb = 134217729.0 * b
    cdef double ah = ca - (ca - a), bh = cb - (cb - b)
    cdef double al = a - ah, bl = b - bh
    return ((ah * bh - p) + ah * bl + al * bh) + al * bl


def pair_table(levels, mean_sq, psi, trig, double sigma2, bint noise_corrected):
    cdef const long long[::1] lv = np.ascontiguousarray(levels, dtype=np.int64)
    cdef const double[::1] m = np.ascontiguousarray(mean_sq, dtype=np.float64)
    cdef const double[::1] ps = np.ascontiguousarray(psi, dtype=np.float64)
    cdef const double[::1] tg = np.ascontiguousarray(trig, dtype=np.float64)
    cdef Py_ssize_t nl = lv.shape[0], npairs = nl * (nl - 1) // 2
    cdef Py_ssize_t a, b, p
    cdef double n, e_psi, big, offset, dj, prod

    log_term = np.empty(nl)
    lev_var = np.empty(nl)
    lev_code = np.empty(nl, dtype=np.int8)
    cdef double[::1] lt = log_term, lvv = lev_var
    cdef signed char[::1] lc = lev_code

    h_hat = np.empty(npairs)
    var = np.empty(npairs)
    code = np.empty(npairs, dtype=np.int8)
    cdef double[::1] hv = h_hat, vv = var
    cdef signed char[::1] cv = code
    cdef signed char c1, c2, c

    offset = 0.5 if noise_corrected else 1.0
    with nogil:
        for a in range(nl):
            n = <double>(1LL << lv[a])
            if noise_corrected:
                e_psi = exp(ps[a])
                prod = sigma2 * e_psi
                big = (n * m[a] - 2.0 * prod) - 2.0 * two_prod_err(sigma2, e_psi, prod)
                if not m[a] > 0:
                    lc[a] = DEGENERATE
                elif n <= 4:
                    lc[a] = INSUFFICIENT_DOF
                elif not big > 0:
                    lc[a] = NOISE_DOMINATES
                else:
                    lc[a] = VALID
                if lc[a] == VALID:
                    lt[a] = log(big)
                    lvv[a] = (tg[a]
                              + 8.0 * sigma2 * sigma2 * e_psi * e_psi
                              / (m[a] * m[a] * (n - 2.0) * (n - 2.0) * (n - 4.0))
                              + 8.0 * sigma2 * e_psi / (m[a] * (n - 2.0) * n))
            else:
                lc[a] = VALID if m[a] > 0 else DEGENERATE
                if lc[a] == VALID:
                    lt[a] = log(m[a])
                    lvv[a] = tg[a]

        p = 0
        for a in range(nl):
            for b in range(a + 1, nl):
                c1 = lc[a]
                c2 = lc[b]
                if c1 == VALID:
                    c = c2
                elif c2 == VALID:
                    c = c1
                else:
                    c = c1 if c1 < c2 else c2
                cv[p] = c
                if c == VALID:
                    dj = <double>(lv[a] - lv[b])
                    hv[p] = ((ps[a] - ps[b]) - (lt[a] - lt[b])) / (LN2 * 2.0 * dj) - offset
                    vv[p] = (lvv[a] + lvv[b]) / ((2.0 * dj * LN2) * (2.0 * dj * LN2))
                else:
                    hv[p] = NAN
                    vv[p] = NAN
                p += 1
    return h_hat, var, code
