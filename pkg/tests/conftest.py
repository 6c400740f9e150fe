"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from tfrct import DensityMatrix, MeasurementBasis, maximally_mixed

PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def mub_bases():
    """The three mutually unbiased qubit bases (Z, X, Y eigenbases)."""
    u_z = np.eye(2, dtype=complex)
    u_x = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    u_y = np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2)
    return tuple(MeasurementBasis(u) for u in (u_z, u_x, u_y))


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityMatrix:
    """Wishart-style random mixed state, optionally rank-restricted."""
    cols = rank or d
    g = rng.standard_normal((d, cols)) + 1j * rng.standard_normal((d, cols))
    m = g @ g.conj().T
    m /= np.real(np.trace(m))
    return DensityMatrix(m, maximally_mixed(d).basis)


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return v / np.linalg.norm(v)


def bloch_vector(rho2: np.ndarray) -> np.ndarray:
    return np.array([np.real(np.trace(rho2 @ PAULI[a])) for a in "xyz"])


def rho_from_bloch(r: np.ndarray) -> np.ndarray:
    m = np.eye(2, dtype=complex)
    for a, comp in zip("xyz", r):
        m = m + comp * PAULI[a]
    return m / 2.0


def bloch_constrained_extrema(z: np.ndarray, bases, probs, step: float = 1e-3):
    """Brute-force extrema of tr(rho Z) over qubit states matching the data.

    Works directly in Bloch coordinates: each basis contributes one plane
    n.r = 2p_0 - 1; the feasible set (plane intersection within the unit
    ball) is scanned on a grid of the given step, plus exactly computed
    boundary points so optima on the sphere are not missed.  Fully
    independent of the interior-point machinery.
    """
    rows, rhs = [], []
    for basis, p in zip(bases, probs):
        v = basis.vectors[:, 0]
        n = np.array(
            [
                2.0 * np.real(np.conj(v[0]) * v[1]),
                2.0 * np.imag(np.conj(v[0]) * v[1]),
                abs(v[0]) ** 2 - abs(v[1]) ** 2,
            ]
        )
        rows.append(n)
        rhs.append(2.0 * float(p[0]) - 1.0)
    z_vec = np.array([np.real(np.trace(z @ PAULI[a])) for a in "xyz"])
    trace_term = float(np.real(np.trace(z)))

    def f_of(points):
        return 0.5 * (trace_term + points @ z_vec)

    if rows:
        a = np.array(rows)
        r0, *_ = np.linalg.lstsq(a, np.array(rhs), rcond=None)
        _, sing, vt = np.linalg.svd(a, full_matrices=True)
        rank = int(np.sum(sing > 1e-12))
        null = vt[rank:].T  # (3, 3-rank)
    else:
        r0 = np.zeros(3)
        null = np.eye(3)
    ndim = null.shape[1]

    points = [r0]
    if ndim >= 1:
        # exact boundary points along sampled directions: solve |r0+s u|=1
        n_dirs = 1 if ndim == 1 else 62832  # ~1e-4 rad resolution on the disk rim
        for i in range(n_dirs):
            if ndim == 1:
                u = null[:, 0]
            else:
                ang = 2 * np.pi * i / n_dirs
                u = null @ np.array([np.cos(ang), np.sin(ang)])
            aa = u @ u
            bb = 2 * r0 @ u
            cc = r0 @ r0 - 1.0
            disc = bb * bb - 4 * aa * cc
            if disc < 0:
                continue
            for sgn in (-1.0, 1.0):
                s = (-bb + sgn * np.sqrt(disc)) / (2 * aa)
                points.append(r0 + s * u)
        # interior grid
        ticks = np.arange(-1.0, 1.0 + step / 2, step)
        if ndim == 1:
            grid = r0[None, :] + ticks[:, None] * null[:, 0][None, :]
        else:
            uu, vv = np.meshgrid(ticks, ticks, indexing="ij")
            coef = np.stack([uu.ravel(), vv.ravel()], axis=1)
            grid = r0[None, :] + coef @ null.T
        inside = np.sum(grid * grid, axis=1) <= 1.0
        points.append(grid[inside])
    pts = np.vstack([np.atleast_2d(p) for p in points])
    pts = pts[np.sum(pts * pts, axis=1) <= 1.0 + 1e-12]
    vals = f_of(pts)
    return float(vals.min()), float(vals.max())


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
