"""NumPy backend for chronocyclic Wigner evaluation on rectangular grids.

Same term ordering as the compiled backend: for each superdiagonal k the
Laguerre recurrence runs over n, Hermitian-conjugate terms are paired into a
single real contribution.
"""

from __future__ import annotations

import math

import numpy as np


def wigner_grid_values(rho: np.ndarray, t_axis: np.ndarray, omega_axis: np.ndarray) -> np.ndarray:
    """Evaluate W(t, omega) for an HG-basis density matrix on a grid.

    Returns a (len(t_axis), len(omega_axis)) real array.
    """
    d = rho.shape[0]
    t = np.asarray(t_axis, dtype=float)[:, None]
    w = np.asarray(omega_axis, dtype=float)[None, :]
    x = 2.0 * (t * t + w * w)  # Laguerre argument 4|alpha|^2
    b = np.sqrt(x)             # 2|alpha|
    phase = np.exp(-1j * np.arctan2(w, t) * np.ones_like(x))

    acc = np.zeros_like(x)
    bk = np.ones_like(x)
    ek = np.ones_like(phase)
    for k in range(d):
        if k > 0:
            bk = bk * b
            ek = ek * phase
        sk = np.zeros_like(phase)
        lag_prev = np.zeros_like(x)
        lag = np.ones_like(x)
        for n in range(d - k):
            if n == 1:
                lag_prev, lag = lag, (1.0 + k - x)
            elif n > 1:
                lag_prev, lag = lag, (
                    ((2.0 * n - 1.0 + k - x) * lag - (n - 1.0 + k) * lag_prev) / n
                )
            coeff = (-1.0) ** n * math.exp(
                0.5 * (math.lgamma(n + 1) - math.lgamma(n + k + 1))
            )
            sk = sk + (coeff * rho[n, n + k]) * lag
        if k == 0:
            acc += sk.real
        else:
            acc += 2.0 * (sk * ek).real * bk
    return 2.0 * np.exp(-0.5 * x) * acc
