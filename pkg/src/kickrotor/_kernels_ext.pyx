# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same call signatures as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport cos, sin, floor, M_PI

cnp.import_array()


def phase_multiply(double complex[:, ::1] amps, coeff, double scale):
    cdef Py_ssize_t n = amps.shape[0], m = amps.shape[1], i, j
    cdef double[:, ::1] c2
    cdef double[::1] c1
    cdef double a, cr, ci, re, im
    if coeff.ndim == 1:
        c1 = coeff
        with nogil:
            for i in range(n):
                for j in range(m):
                    a = -scale * c1[j]
                    cr = cos(a)
                    ci = sin(a)
                    re = amps[i, j].real
                    im = amps[i, j].imag
                    amps[i, j] = (re * cr - im * ci) + 1j * (re * ci + im * cr)
    else:
        c2 = coeff
        with nogil:
            for i in range(n):
                for j in range(m):
                    a = -scale * c2[i, j]
                    cr = cos(a)
                    ci = sin(a)
                    re = amps[i, j].real
                    im = amps[i, j].imag
                    amps[i, j] = (re * cr - im * ci) + 1j * (re * ci + im * cr)


def standard_map(double[::1] theta, double[::1] p, double K, Py_ssize_t n_kicks):
    cdef Py_ssize_t n = theta.shape[0], i, k
    cdef double twopi = 2.0 * M_PI, acc, t
    out = np.empty(n_kicks)
    cdef double[::1] o = out
    with nogil:
        for k in range(n_kicks):
            acc = 0.0
            for i in range(n):
                p[i] = p[i] + K * sin(theta[i])
                # floor-based reduction, as numpy's mod
                t = theta[i] + p[i]
                theta[i] = t - twopi * floor(t / twopi)
                acc = acc + p[i] * p[i]
            o[k] = acc / n
    return out


cdef inline double _sinc(double x) nogil:
    if x == 0.0:
        return 1.0
    return sin(x) / x


def comb_power(double[::1] times, double[::1] strengths, double[::1] widths,
               double[::1] freqs):
    cdef Py_ssize_t nf = freqs.shape[0], nk = times.shape[0], i, k
    cdef double re, im, f, w, ph
    out = np.empty(nf)
    cdef double[::1] o = out
    with nogil:
        for i in range(nf):
            f = freqs[i]
            re = 0.0
            im = 0.0
            for k in range(nk):
                w = strengths[k] * _sinc(M_PI * f * widths[k])
                ph = 2.0 * M_PI * f * times[k]
                re = re + w * cos(ph)
                im = im + w * sin(ph)
            o[i] = re * re + im * im
    return out
