"""Dense Hermitian linear algebra for small state spaces (d up to ~32).

All routines operate on square complex ndarrays and enforce the conventions
used throughout the package: eigenvalues ascending, eigenvector global phase
fixed so results are reproducible bit-for-bit for identical inputs.
"""

from __future__ import annotations

import numpy as np

HERMITICITY_ATOL = 1e-12
PSD_ATOL = 1e-10


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return the Hermitian part (a + a†)/2 as a fresh complex array."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    return 0.5 * (a + a.conj().T)


def is_hermitian(a: np.ndarray, atol: float = HERMITICITY_ATOL) -> bool:
    a = np.asarray(a)
    return a.ndim == 2 and a.shape[0] == a.shape[1] and np.all(np.abs(a - a.conj().T) <= atol)


def _fix_eigenvector_phases(vecs: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible component is real positive.

    Makes the eigendecomposition output deterministic across runs; columns
    with no component above threshold are left untouched.
    """
    out = vecs.copy()
    d = vecs.shape[0]
    for j in range(vecs.shape[1]):
        col = out[:, j]
        for i in range(d):
            v = col[i]
            if abs(v) > 1e-12:
                out[:, j] = col * (abs(v) / v)
                break
    return out


def eig_hermitian(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Returns (eigenvalues ascending, eigenvector matrix V with columns
    matching the eigenvalue order), so m = V diag(w) V†.  Raises if the
    reconstruction residual is out of tolerance, which indicates either a
    non-Hermitian input or solver breakdown.
    """
    m = np.asarray(m, dtype=np.complex128)
    if not is_hermitian(m, atol=1e-9):
        raise ValueError("eig_hermitian requires a Hermitian matrix")
    h = hermitize(m)
    w, v = np.linalg.eigh(h)
    v = _fix_eigenvector_phases(v)
    resid = np.linalg.norm(v @ np.diag(w) @ v.conj().T - h)
    if resid > 1e-10 * max(1.0, h.shape[0]):
        raise np.linalg.LinAlgError(
            f"Hermitian eigendecomposition residual {resid:.3e} exceeds tolerance"
        )
    return w, v


def matrix_sqrt_psd(m: np.ndarray) -> np.ndarray:
    """Principal square root of a PSD Hermitian matrix.

    Eigenvalues in [-PSD_ATOL, 0) are treated as numerical noise and clamped
    to zero; anything more negative raises.
    """
    w, v = eig_hermitian(m)
    if w[0] < -PSD_ATOL:
        raise ValueError(f"matrix is not PSD: smallest eigenvalue {w[0]:.3e}")
    w = np.clip(w, 0.0, None)
    return hermitize((v * np.sqrt(w)) @ v.conj().T)


def simplex_project(values: np.ndarray) -> np.ndarray:
    """Euclidean projection of a real vector onto the probability simplex."""
    values = np.asarray(values, dtype=float)
    u = np.sort(values)[::-1]
    css = np.cumsum(u) - 1.0
    idx = np.arange(1, len(u) + 1)
    cond = u - css / idx > 0
    k = idx[cond][-1]
    tau = css[k - 1] / k
    return np.clip(values - tau, 0.0, None)


def project_to_state_space(m: np.ndarray) -> np.ndarray:
    """Closest (Frobenius) unit-trace PSD matrix to a Hermitian input.

    The spectrum is projected onto the probability simplex while the
    eigenvectors are kept, which is the exact minimizer.
    """
    w, v = eig_hermitian(m)
    w_proj = simplex_project(w)
    return hermitize((v * w_proj) @ v.conj().T)


def trace_inner(a: np.ndarray, b: np.ndarray) -> float:
    """tr(a b) for Hermitian a, b (real by symmetry)."""
    return float(np.real(np.sum(a * b.T)))
