"""Simulated mode-selective projective measurements in Haar-random bases.

The pulse gate projects the input state onto one pump-defined mode per
setting; scanning the d modes of a randomly rotated basis yields one click
distribution per basis.  The conversion efficiency rescales absolute count
rates only; relative frequencies, which are all the reconstruction consumes,
are unaffected in this ideal model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .states import DensityMatrix

GRAM_ATOL = 1e-10


@dataclass(frozen=True)
class MeasurementBasis:
    """Orthonormal basis given as columns of a unitary."""

    vectors: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        u = np.asarray(self.vectors, dtype=np.complex128)
        gram = u.conj().T @ u
        if not np.allclose(gram, np.eye(u.shape[1]), atol=GRAM_ATOL):
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", u)

    @property
    def dim(self) -> int:
        return self.vectors.shape[0]

    def vector(self, l: int) -> np.ndarray:
        return self.vectors[:, l]


@dataclass(frozen=True)
class QpgConfig:
    """Pulse-gate measurement settings.

    eta = sin^2(theta) is the conversion efficiency.  background_rate is a
    hook for additive uniform dark counts; the default model keeps it at 0.
    """

    theta: float = math.pi / 2
    clicks_per_basis: int = 10_000
    noiseless: bool = False
    background_rate: float = 0.0

    def __post_init__(self):
        if self.clicks_per_basis <= 0:
            raise ValueError("clicks_per_basis must be positive")
        if self.background_rate != 0.0:
            raise NotImplementedError("background counts are reserved, not modeled yet")

    @property
    def eta(self) -> float:
        return math.sin(self.theta) ** 2


@dataclass(frozen=True)
class CountRecord:
    """Click counts for one measured basis and their relative frequencies.

    For sampled data frequencies equal counts/sum; noiseless records carry
    the exact Born probabilities alongside integer counts rounded to the
    click budget.
    """

    basis_index: int
    counts: np.ndarray
    frequencies: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        freqs = np.asarray(self.frequencies, dtype=float)
        if np.any(counts < 0):
            raise ValueError("counts must be nonnegative")
        if counts.sum() > 0 and abs(freqs.sum() - 1.0) > 1e-12:
            raise ValueError("relative frequencies must sum to 1")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "frequencies", freqs)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def haar_unitary(d: int, rng: np.random.Generator, seed: int | None = None) -> MeasurementBasis:
    """Haar-distributed random basis via phase-corrected QR of a Ginibre matrix."""
    if d < 1:
        raise ValueError("dimension must be at least 1")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    q = q * (diag / np.abs(diag))
    return MeasurementBasis(q, seed=seed)


def born_probabilities(rho: DensityMatrix, basis: MeasurementBasis) -> np.ndarray:
    """Projection probabilities <b_l| rho |b_l> for every basis vector."""
    if rho.dim != basis.dim:
        raise ValueError(f"dimension mismatch: state {rho.dim}, basis {basis.dim}")
    u = basis.vectors
    p = np.real(np.einsum("il,ij,jl->l", u.conj(), rho.matrix, u))
    if p.min() < -1e-10 or p.max() > 1.0 + 1e-10:
        raise ArithmeticError(f"Born probabilities out of range: [{p.min()}, {p.max()}]")
    return np.clip(p, 0.0, 1.0)


def expected_converted_counts(rho: DensityMatrix, mode: np.ndarray, config: QpgConfig) -> float:
    """Mean detected counts N * eta * <mode| rho |mode> for one pump setting."""
    mode = np.asarray(mode, dtype=np.complex128).reshape(-1)
    if abs(np.linalg.norm(mode) - 1.0) > 1e-9:
        raise ValueError("pump mode must be a unit vector")
    overlap = float(np.real(mode.conj() @ rho.matrix @ mode))
    return config.clicks_per_basis * config.eta * overlap


def _largest_remainder_counts(p: np.ndarray, total: int) -> np.ndarray:
    """Round total*p to integers that sum exactly to total."""
    raw = p * total
    base = np.floor(raw).astype(np.int64)
    short = total - int(base.sum())
    if short > 0:
        order = np.argsort(raw - base)[::-1]
        base[order[:short]] += 1
    return base


def simulate_basis_measurement(
    rho: DensityMatrix,
    basis: MeasurementBasis,
    config: QpgConfig,
    rng: np.random.Generator,
    basis_index: int = 0,
) -> CountRecord:
    """One simulated basis scan: exact frequencies or a multinomial draw."""
    p = born_probabilities(rho, basis)
    n = config.clicks_per_basis
    if config.noiseless:
        return CountRecord(
            basis_index=basis_index,
            counts=_largest_remainder_counts(p, n),
            frequencies=p / p.sum(),
        )
    counts = rng.multinomial(n, p / p.sum())
    return CountRecord(basis_index=basis_index, counts=counts, frequencies=counts / n)


def mix_count_records(
    record_sets: list[list[CountRecord]], weights: list[float]
) -> list[CountRecord]:
    """Convex post-processing mixture of datasets taken with shared bases.

    Mirrors measuring each pure input with the same random bases and mixing
    the data afterwards; frequencies mix exactly, counts are re-rounded to
    the common click budget.
    """
    if len(record_sets) != len(weights):
        raise ValueError("one weight per record set required")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise ValueError("mixture weights must sum to 1")
    n_bases = len(record_sets[0])
    for recs in record_sets:
        if len(recs) != n_bases:
            raise ValueError("record sets cover different numbers of bases")
        for ref, rec in zip(record_sets[0], recs):
            if rec.basis_index != ref.basis_index or rec.counts.shape != ref.counts.shape:
                raise ValueError("record sets were not measured with the same bases")
    mixed = []
    for j in range(n_bases):
        total = record_sets[0][j].total
        freqs = np.zeros_like(record_sets[0][j].frequencies)
        for w, recs in zip(weights, record_sets):
            freqs = freqs + w * recs[j].frequencies
        mixed.append(
            CountRecord(
                basis_index=record_sets[0][j].basis_index,
                counts=_largest_remainder_counts(freqs, total),
                frequencies=freqs,
            )
        )
    return mixed
