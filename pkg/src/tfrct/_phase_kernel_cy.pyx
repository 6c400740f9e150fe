# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled backend for chronocyclic Wigner evaluation on rectangular grids.

Mirrors the NumPy backend term for term; the per-node loop keeps the
Laguerre recurrences in scalars, which is where the speedup comes from.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport atan2, cos, exp, lgamma, sin, sqrt

cnp.import_array()


def wigner_grid_values(cnp.complex128_t[:, :] rho, double[:] t_axis, double[:] omega_axis):
    """Evaluate W(t, omega) for an HG-basis density matrix on a grid."""
    cdef Py_ssize_t d = rho.shape[0]
    cdef Py_ssize_t nt = t_axis.shape[0]
    cdef Py_ssize_t nw = omega_axis.shape[0]
    out_arr = np.empty((nt, nw), dtype=np.float64)
    cdef double[:, :] out = out_arr

    # coeff[k*d + n] = (-1)^n sqrt(n!/(n+k)!)
    coeff_arr = np.zeros(d * d, dtype=np.float64)
    cdef double[:] coeff = coeff_arr
    cdef Py_ssize_t k, n
    for k in range(d):
        for n in range(d - k):
            coeff[k * d + n] = (1.0 if n % 2 == 0 else -1.0) * exp(
                0.5 * (lgamma(n + 1) - lgamma(n + k + 1))
            )

    cdef Py_ssize_t it, iw
    cdef double t, w, x, b, theta, bk, ck, sk_re
    cdef double lag, lag_prev, lag_next, acc
    cdef double complex sk, ek, ephase, term
    for it in range(nt):
        t = t_axis[it]
        for iw in range(nw):
            w = omega_axis[iw]
            x = 2.0 * (t * t + w * w)
            b = sqrt(x)
            theta = atan2(w, t)
            ephase = cos(theta) - 1j * sin(theta)
            acc = 0.0
            bk = 1.0
            ek = 1.0
            for k in range(d):
                if k > 0:
                    bk = bk * b
                    ek = ek * ephase
                sk = 0.0
                lag_prev = 0.0
                lag = 1.0
                for n in range(d - k):
                    if n == 1:
                        lag_prev = lag
                        lag = 1.0 + k - x
                    elif n > 1:
                        lag_next = ((2.0 * n - 1.0 + k - x) * lag - (n - 1.0 + k) * lag_prev) / n
                        lag_prev = lag
                        lag = lag_next
                    sk = sk + coeff[k * d + n] * rho[n, n + k] * lag
                if k == 0:
                    acc += sk.real
                else:
                    term = sk * ek
                    acc += 2.0 * term.real * bk
            out[it, iw] = 2.0 * exp(-0.5 * x) * acc
    return out_arr
