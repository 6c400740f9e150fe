"""Informational completeness certification.

Given the accumulated bases and their maximum-likelihood probabilities, two
semidefinite programs extremize tr(rho Z) for a fixed random full-rank Z
over every state consistent with the data.  The spread s_cvx between the
two optima vanishes exactly when the consistent set is a single point, i.e.
when the dataset is informationally complete.

Exact (noiseless) probabilities enter as equality constraints, which are
orthonormalized first so redundant outcomes cannot break the solver; when
the constraints already pin the state down by rank alone the extrema
coincide at the unique feasible point and no iteration is needed.  Finite
count statistics enter as per-outcome tolerance bands around the
probabilities, implemented with slack variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import sdp
from .linalg import eig_hermitian, hermitize, project_to_state_space
from .measurement import MeasurementBasis
from .states import DensityMatrix, maximally_mixed

Z_MIN_EIG_FRACTION = 1e-3
CERTIFIED_GAP = 1e-7
DEFAULT_IC_RELATIVE_THRESHOLD = 1e-5
BAND_FLOOR = 1e-9
WARM_BLEND = 1e-3


class CertificationError(RuntimeError):
    pass


class InfeasibleData(CertificationError):
    """Constraints admit no state; carries the worst violation found."""

    def __init__(self, message: str, violation: float):
        super().__init__(message)
        self.violation = violation


def random_full_rank_z(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random Hermitian matrix with unit spectral norm and no tiny eigenvalues."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    for _ in range(100):
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        z = hermitize(g)
        w = np.linalg.eigvalsh(z)
        spectral = np.max(np.abs(w))
        if np.min(np.abs(w)) > Z_MIN_EIG_FRACTION * spectral:
            return z / spectral
    # Push the spectrum away from zero; all eigenvalues shift together.
    z = z + 2.0 * Z_MIN_EIG_FRACTION * spectral * np.eye(d)
    w = np.linalg.eigvalsh(z)
    return z / np.max(np.abs(w))


@dataclass(frozen=True)
class IccProblem:
    """One certification instance: bases, target probabilities, objective Z."""

    bases: tuple[MeasurementBasis, ...]
    p_hat: np.ndarray                 # (n_bases, d)
    z: np.ndarray                     # Hermitian, full rank
    tolerances: np.ndarray            # (n_bases, d) band half-widths, 0 = equality
    ic_threshold: float | None = None  # None: 1e-5 of the spectral width of z

    def __post_init__(self):
        z = hermitize(self.z)
        w = np.abs(np.linalg.eigvalsh(z))
        if w.min() <= 1e-6:
            raise ValueError(f"Z must be full rank; smallest |eigenvalue| {w.min():.3e}")
        p = np.asarray(self.p_hat, dtype=float)
        if p.ndim != 2 or p.shape[0] != len(self.bases):
            raise ValueError("p_hat must have one row per basis")
        if p.size and np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-9:
            raise ValueError("each probability row must sum to 1")
        tol = np.asarray(self.tolerances, dtype=float)
        if tol.shape != p.shape or np.any(tol < 0):
            raise ValueError("tolerances must be nonnegative and match p_hat")
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "p_hat", p)
        object.__setattr__(self, "tolerances", tol)

    @property
    def dim(self) -> int:
        return self.z.shape[0]

    def spectral_width(self) -> float:
        w = np.linalg.eigvalsh(self.z)
        return float(w[-1] - w[0])

    def effective_threshold(self) -> float:
        if self.ic_threshold is not None:
            return self.ic_threshold
        return DEFAULT_IC_RELATIVE_THRESHOLD * self.spectral_width()

    def constraint_matrices(self):
        """Projectors and targets, trace constraint first."""
        d = self.dim
        mats = [np.eye(d, dtype=np.complex128)]
        vals = [1.0]
        tols = [0.0]
        for k, basis in enumerate(self.bases):
            for l in range(d):
                v = basis.vector(l)
                mats.append(np.outer(v, v.conj()))
                vals.append(float(self.p_hat[k, l]))
                tols.append(float(self.tolerances[k, l]))
        return mats, np.array(vals), np.array(tols)

    def max_violation(self, rho: DensityMatrix) -> float:
        """Worst band-adjusted constraint violation of a candidate state."""
        mats, vals, tols = self.constraint_matrices()
        worst = 0.0
        for mat, val, tol in zip(mats, vals, tols):
            got = float(np.real(np.trace(mat @ rho.matrix)))
            worst = max(worst, abs(got - val) - tol)
        return worst


@dataclass(frozen=True)
class IccCertificate:
    f_min: float
    f_max: float
    s_cvx: float
    rho_min: DensityMatrix
    rho_max: DensityMatrix
    duality_gaps: tuple[float, float]
    is_ic: bool
    ic_threshold: float
    pinned: bool = False   # constraints determined the state by rank alone


def _reduce_equalities(mats, vals, d):
    """Shared SVD reduction plus an affine-consistency gate."""
    red = sdp.reduce_hermitian_equalities(mats, vals)
    if red.residual > 1e-8:
        raise InfeasibleData(
            f"equality constraints are mutually inconsistent (violation {red.residual:.3e})",
            red.residual,
        )
    return red.matrices, red.rhs, red.particular, red.rank


def _as_state(matrix: np.ndarray) -> DensityMatrix:
    m = hermitize(matrix)
    m = m / np.real(np.trace(m))
    try:
        return DensityMatrix(m, maximally_mixed(m.shape[0]).basis)
    except ValueError:
        return DensityMatrix(project_to_state_space(m), maximally_mixed(m.shape[0]).basis)


def _extremize(c_embed, a_embed, b, a_lin, x0, x0_lin):
    sol = sdp.solve_sdp(
        c_psd=c_embed,
        a_psd=a_embed,
        b=b,
        a_lin=a_lin,
        x0_psd=x0,
        x0_lin=x0_lin,
    )
    certified = sol.gap <= CERTIFIED_GAP and sol.pinfeas <= CERTIFIED_GAP and sol.dinfeas <= CERTIFIED_GAP
    if sol.status != "optimal" and not certified:
        raise CertificationError(
            f"SDP did not converge: status={sol.status}, gap={sol.gap:.3e}, "
            f"pinfeas={sol.pinfeas:.3e}, dinfeas={sol.dinfeas:.3e}"
        )
    return sol


def solve_extrema(problem: IccProblem, warm_start: DensityMatrix | None = None) -> IccCertificate:
    """Min and max of tr(rho Z) over the data-consistent state set."""
    d = problem.dim
    mats, vals, tols = problem.constraint_matrices()
    threshold = problem.effective_threshold()

    warm = warm_start.matrix if warm_start is not None else np.eye(d, dtype=complex) / d
    warm = (1.0 - WARM_BLEND) * warm + WARM_BLEND * np.eye(d) / d

    if np.all(tols == 0.0):
        reduced, rhs, particular, rank = _reduce_equalities(mats, vals, d)
        if rank == d * d:
            rho = _as_state(sdp.hermitian_from_coords(particular, d))
            smallest = float(np.linalg.eigvalsh(hermitize(sdp.hermitian_from_coords(particular, d)))[0])
            if smallest < -1e-7:
                raise InfeasibleData(
                    f"unique constraint solution is not PSD (eigenvalue {smallest:.3e})",
                    -smallest,
                )
            f = float(np.real(np.trace(rho.matrix @ problem.z)))
            return IccCertificate(
                f_min=f, f_max=f, s_cvx=0.0, rho_min=rho, rho_max=rho,
                duality_gaps=(0.0, 0.0), is_ic=0.0 < threshold,
                ic_threshold=threshold, pinned=True,
            )
        a_embed = np.array([sdp.embed_hermitian(m) / 2.0 for m in reduced])
        b_vec = rhs
        a_lin = None
        x0_lin = None
    else:
        # Trace stays an equality row; every outcome becomes a two-sided band
        # with its own slack, so rows are independent by construction.
        tols = np.maximum(tols, BAND_FLOOR)
        tols[0] = 0.0
        proj = mats[1:]
        n_out = len(proj)
        a_embed = np.empty((1 + 2 * n_out, 2 * d, 2 * d))
        a_embed[0] = sdp.embed_hermitian(mats[0]) / 2.0
        b_vec = np.empty(1 + 2 * n_out)
        b_vec[0] = vals[0]
        a_lin = np.zeros((1 + 2 * n_out, 2 * n_out))
        warm_p = np.array([float(np.real(np.trace(m @ warm))) for m in proj])
        x0_lin = np.empty(2 * n_out)
        for j, m in enumerate(proj):
            emb = sdp.embed_hermitian(m) / 2.0
            hi, lo = vals[1 + j] + tols[1 + j], vals[1 + j] - tols[1 + j]
            a_embed[1 + 2 * j] = emb
            a_embed[2 + 2 * j] = emb
            b_vec[1 + 2 * j] = hi
            b_vec[2 + 2 * j] = lo
            a_lin[1 + 2 * j, 2 * j] = 1.0     # <B, rho> + u = p + t
            a_lin[2 + 2 * j, 2 * j + 1] = -1.0  # <B, rho> - v = p - t
            x0_lin[2 * j] = hi - warm_p[j]
            x0_lin[2 * j + 1] = warm_p[j] - lo

    x0 = sdp.embed_hermitian(warm)
    c_embed = sdp.embed_hermitian(problem.z) / 2.0

    sol_min = _extremize(c_embed, a_embed, b_vec, a_lin, x0, x0_lin)
    sol_max = _extremize(-c_embed, a_embed, b_vec, a_lin, x0, x0_lin)

    f_min = sol_min.primal_objective
    f_max = -sol_max.primal_objective
    raw = f_max - f_min
    # two independently certified solves may cross by their combined gaps
    crossing_tol = 1e-8 + sol_min.gap + sol_max.gap
    if raw < -crossing_tol:
        raise CertificationError(f"extrema crossed: f_max - f_min = {raw:.3e}")
    s_cvx = max(raw, 0.0)
    return IccCertificate(
        f_min=f_min,
        f_max=f_max,
        s_cvx=s_cvx,
        rho_min=_as_state(sdp.unembed_hermitian(sol_min.x_psd)),
        rho_max=_as_state(sdp.unembed_hermitian(sol_max.x_psd)),
        duality_gaps=(sol_min.gap, sol_max.gap),
        is_ic=s_cvx < threshold,
        ic_threshold=threshold,
    )


def is_informationally_complete(cert: IccCertificate, threshold: float | None = None) -> bool:
    """s_cvx below threshold means the consistent set is a single point."""
    return cert.s_cvx < (cert.ic_threshold if threshold is None else threshold)


def binomial_band_tolerances(p_hat: np.ndarray, clicks_per_basis: int) -> np.ndarray:
    """Per-outcome 3-sigma binomial standard errors, floored away from zero."""
    p = np.clip(np.asarray(p_hat, dtype=float), 0.0, 1.0)
    se = np.sqrt(p * (1.0 - p) / clicks_per_basis)
    return np.maximum(3.0 * se, BAND_FLOOR)
