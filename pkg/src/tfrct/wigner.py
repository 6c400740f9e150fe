"""Chronocyclic Wigner function of HG-basis states.

For a density matrix with elements rho_{nn'} over the first d
Hermite-Gaussian modes,

    W(t, w) = 2 e^{-(t^2+w^2)} sum_{n,n'} (-1)^{n<} rho_{nn'} (2|a|)^{n>-n<}
              sqrt(n<!/n>!) e^{-i(n'-n) theta} L_{n<}^{(n>-n<)}(2(t^2+w^2))

with a = (t + i w)/sqrt(2) = |a| e^{i theta}, n> = max(n, n'), n< = min(n, n').
Normalization convention: the integral of W over the (t, w) plane divided by
2 pi equals the trace.

Grid evaluation dispatches to a compiled kernel when the extension built,
with a NumPy fallback selected at import (see KERNEL_BACKEND).  Set the
environment variable TFRCT_PURE_PYTHON=1 before import to force the
fallback.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np

from .states import BasisKind, DensityMatrix

if os.environ.get("TFRCT_PURE_PYTHON"):
    from . import _phase_kernel_np as _kernel

    KERNEL_BACKEND = "numpy"
else:
    try:
        from . import _phase_kernel_cy as _kernel  # type: ignore[no-redef]

        KERNEL_BACKEND = "cython"
    except ImportError:
        from . import _phase_kernel_np as _kernel  # type: ignore[no-redef]

        KERNEL_BACKEND = "numpy"


@dataclass(frozen=True)
class PhasePoint:
    """A point (t, omega) of the dimensionless time-frequency plane."""

    t: float
    omega: float

    @property
    def y(self) -> float:
        return self.t**2 + self.omega**2

    @property
    def alpha_abs(self) -> float:
        return math.sqrt(self.y / 2.0)

    @property
    def theta(self) -> float:
        return math.atan2(self.omega, self.t)


@dataclass(frozen=True)
class WignerGrid:
    t_axis: np.ndarray
    omega_axis: np.ndarray
    values: np.ndarray
    normalization: float

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise ValueError("Wigner grid contains non-finite values")


def associated_laguerre(n: int, k: int, x):
    """L_n^{(k)}(x) by the stable three-term recurrence; x may be an array."""
    if n < 0 or k < 0:
        raise ValueError("polynomial orders must be nonnegative")
    x = np.asarray(x, dtype=float)
    prev = np.zeros_like(x)
    cur = np.ones_like(x)
    for i in range(1, n + 1):
        prev, cur = cur, ((2 * i - 1 + k - x) * cur - (i - 1 + k) * prev) / i
    return cur if cur.ndim else float(cur)


def _require_hg(rho: DensityMatrix, what: str):
    if rho.basis.kind is not BasisKind.HG_MODE:
        raise ValueError(f"{what} requires an HG-basis state; got {rho.basis.kind.value}")


def wigner_value(rho: DensityMatrix, p: PhasePoint) -> float:
    """W(t, omega) at one phase-space point, by the full complex double sum.

    Kept separate from the grid kernels so the two paths cross-check each
    other; the Hermitian-paired imaginary residual is verified to vanish.
    """
    _require_hg(rho, "wigner_value")
    d = rho.dim
    m = rho.matrix
    y = p.y
    two_alpha = math.sqrt(2.0 * y)
    total = 0.0 + 0.0j
    for n in range(d):
        for n2 in range(d):
            lo, hi = min(n, n2), max(n, n2)
            k = hi - lo
            weight = math.exp(0.5 * (math.lgamma(lo + 1) - math.lgamma(hi + 1)))
            term = (
                (-1.0) ** lo
                * m[n, n2]
                * weight
                * two_alpha**k
                * np.exp(-1j * (n2 - n) * p.theta)
                * associated_laguerre(lo, k, 2.0 * y)
            )
            total += term
    total *= 2.0 * math.exp(-y)
    if abs(total.imag) > 1e-9:
        raise ArithmeticError(f"Wigner sum has imaginary residual {total.imag:.3e}")
    return float(total.real)


def wigner_grid(
    rho: DensityMatrix,
    t_range: tuple[float, float] = (-4.0, 4.0),
    omega_range: tuple[float, float] = (-4.0, 4.0),
    resolution: int | tuple[int, int] = 101,
) -> WignerGrid:
    """Evaluate the Wigner function on a uniform grid.

    Also computes the discrete normalization integral
    sum(W) * dt * dw / (2 pi), which approaches the trace for ranges covering
    the state's support.
    """
    _require_hg(rho, "wigner_grid")
    nt, nw = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nt < 2 or nw < 2:
        raise ValueError("grid resolution must be at least 2 per axis")
    if not (t_range[0] < t_range[1] and omega_range[0] < omega_range[1]):
        raise ValueError("grid ranges must be nonempty")
    t_axis = np.linspace(t_range[0], t_range[1], nt)
    omega_axis = np.linspace(omega_range[0], omega_range[1], nw)
    values = np.asarray(
        _kernel.wigner_grid_values(
            np.ascontiguousarray(rho.matrix), t_axis, omega_axis
        )
    )
    dt = t_axis[1] - t_axis[0]
    dw = omega_axis[1] - omega_axis[0]
    norm = float(values.sum() * dt * dw / (2.0 * math.pi))
    return WignerGrid(t_axis=t_axis, omega_axis=omega_axis, values=values, normalization=norm)


def export_u_matrix_real(rho: DensityMatrix) -> np.ndarray:
    """Elementwise real part of a frequency-bin density matrix."""
    if rho.basis.kind is not BasisKind.FREQUENCY_BIN:
        raise ValueError("export_u_matrix_real requires a frequency-bin state")
    return rho.matrix.real.copy()
