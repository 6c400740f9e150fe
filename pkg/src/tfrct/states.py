"""Finite-dimensional time-frequency states.

The model space is an abstract d-dimensional Hilbert space whose
computational basis is either the first d Hermite-Gaussian pulse modes or a
set of d narrowband frequency bins.  The physical meaning of the basis lives
entirely in :class:`BasisInfo` metadata; states themselves are plain density
matrices over the computational basis.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from . import linalg

TRACE_ATOL = 1e-9
PSD_EIG_ATOL = 1e-9
DEFAULT_RANK_TOL = 1e-6

HG_FWHM_THZ = 1.0
BIN_WIDTH_THZ = 0.07


class BasisKind(enum.Enum):
    HG_MODE = "hg"
    FREQUENCY_BIN = "freq_bin"


@dataclass(frozen=True)
class BasisInfo:
    """Physical label of the computational basis (informational only)."""

    kind: BasisKind
    bin_centers_thz: tuple[float, ...] | None = None
    fwhm_thz: float | None = None

    def __post_init__(self):
        if self.bin_centers_thz is not None:
            centers = np.asarray(self.bin_centers_thz, dtype=float)
            if np.any(np.diff(centers) <= 0):
                raise ValueError("frequency-bin centers must be strictly increasing")


def hg_basis(d: int) -> BasisInfo:
    return BasisInfo(kind=BasisKind.HG_MODE, fwhm_thz=HG_FWHM_THZ)


def frequency_bin_basis(d: int, spacing_thz: float = BIN_WIDTH_THZ) -> BasisInfo:
    centers = tuple(n * spacing_thz for n in range(d))
    return BasisInfo(kind=BasisKind.FREQUENCY_BIN, bin_centers_thz=centers)


@dataclass(frozen=True)
class DensityMatrix:
    """Positive-semidefinite unit-trace Hermitian matrix with a basis label.

    The matrix is symmetrized on construction; PSD and trace invariants are
    validated and violations raise immediately rather than propagating NaNs
    downstream.
    """

    matrix: np.ndarray
    basis: BasisInfo

    def __post_init__(self):
        m = linalg.hermitize(self.matrix)
        tr = float(np.real(np.trace(m)))
        if abs(tr - 1.0) > TRACE_ATOL:
            raise ValueError(f"density matrix trace {tr!r} is not 1")
        smallest = float(np.linalg.eigvalsh(m)[0])
        if smallest < -PSD_EIG_ATOL:
            raise ValueError(f"density matrix is not PSD: eigenvalue {smallest:.3e}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)


@dataclass(frozen=True)
class StateSpec:
    """Convex mixture specification: unit-norm component vectors and weights."""

    basis: BasisInfo
    components: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self):
        comps = []
        total = 0.0
        for vec, weight in self.components:
            v = np.asarray(vec, dtype=np.complex128).reshape(-1)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise ValueError("component vectors must be unit norm")
            if weight < 0:
                raise ValueError("component weights must be nonnegative")
            comps.append((v, float(weight)))
            total += weight
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"component weights sum to {total!r}, expected 1")
        object.__setattr__(self, "components", tuple(comps))

    @property
    def dim(self) -> int:
        return self.components[0][0].shape[0]


def hg_pure_state(n: int, d: int) -> DensityMatrix:
    """Rank-1 projector onto the n-th Hermite-Gaussian mode of a d-mode space."""
    if not 0 <= n < d:
        raise IndexError(f"mode index {n} out of range for dimension {d}")
    m = np.zeros((d, d), dtype=np.complex128)
    m[n, n] = 1.0
    return DensityMatrix(m, hg_basis(d))


def maximally_mixed(d: int, basis: BasisInfo | None = None) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=np.complex128) / d, basis or hg_basis(d))


def mixture(spec: StateSpec) -> DensityMatrix:
    """Weighted sum of rank-1 projectors built from a StateSpec."""
    d = spec.dim
    m = np.zeros((d, d), dtype=np.complex128)
    for vec, weight in spec.components:
        m += weight * np.outer(vec, vec.conj())
    return DensityMatrix(m, spec.basis)


def frequency_bin_superposition(indices, signs, d: int) -> DensityMatrix:
    """Equal-magnitude signed superposition of frequency bins, as a projector."""
    indices = list(indices)
    signs = list(signs)
    if len(set(indices)) != len(indices):
        raise ValueError("bin indices must be distinct")
    if len(signs) != len(indices):
        raise ValueError("signs and indices must have equal length")
    if any(not 0 <= i < d for i in indices):
        raise ValueError(f"bin index out of range for dimension {d}")
    vec = np.zeros(d, dtype=np.complex128)
    for i, s in zip(indices, signs):
        vec[i] = s
    vec /= np.linalg.norm(vec)
    return DensityMatrix(np.outer(vec, vec.conj()), frequency_bin_basis(d))


def fidelity(a: DensityMatrix, b: DensityMatrix) -> float:
    """Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2, clipped to [0, 1]."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    sa = linalg.matrix_sqrt_psd(a.matrix)
    inner = linalg.hermitize(sa @ b.matrix @ sa)
    w = np.clip(np.linalg.eigvalsh(inner), 0.0, None)
    # the square root amplifies eigenvalue noise of order eps to sqrt(eps),
    # so drop entries that are pure roundoff relative to the top one
    if w[-1] > 0:
        w[w < 1e-12 * w[-1]] = 0.0
    f = float(np.sum(np.sqrt(w)) ** 2)
    return min(max(f, 0.0), 1.0)


def trace_distance(a: DensityMatrix, b: DensityMatrix) -> float:
    """Half the trace norm of the difference."""
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim} vs {b.dim}")
    w = np.linalg.eigvalsh(a.matrix - b.matrix)
    return 0.5 * float(np.sum(np.abs(w)))


def numerical_rank(m: DensityMatrix, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of eigenvalues above tol."""
    if tol <= 0:
        raise ValueError("rank tolerance must be positive")
    return int(np.sum(m.eigenvalues() > tol))


def dof_count(d: int, r: int) -> int:
    """Independent real parameters of a rank-r state in dimension d."""
    return (2 * d - r) * r - 1


# Four pre-chosen three-bin superpositions used for the frequency-bin runs;
# they span the 3-dimensional subspace of bins {0, 3, 6}.
FREQ_BIN_PATTERNS = (
    ((0, 3, 6), (1, 1, 1)),
    ((0, 3, 6), (1, -1, 1)),
    ((0, 3, 6), (1, 1, -1)),
    ((0, 3, 6), (-1, 1, 1)),
)

_MIN_MIX_WEIGHT = 1e-2


def _dirichlet_weights(k: int, rng: np.random.Generator) -> np.ndarray:
    # Resample when a weight is tiny so the numerical rank stays unambiguous
    # at the default 1e-6 tolerance.
    for _ in range(1000):
        w = rng.dirichlet(np.ones(k))
        if k == 1 or w.min() >= _MIN_MIX_WEIGHT:
            return w
    raise RuntimeError("failed to draw well-separated mixture weights")


def random_hg_mixture(rank: int, d: int, rng: np.random.Generator) -> StateSpec:
    """Random rank-r mixture of the low-order HG modes.

    Components are drawn from the first max(4, rank) modes, mirroring the
    pure-mode set used in the reference experiments.
    """
    if not 1 <= rank <= d:
        raise ValueError(f"rank {rank} out of range for dimension {d}")
    pool = min(max(4, rank), d)
    modes = rng.choice(pool, size=rank, replace=False)
    weights = _dirichlet_weights(rank, rng)
    comps = []
    for n, w in zip(modes, weights):
        vec = np.zeros(d, dtype=np.complex128)
        vec[n] = 1.0
        comps.append((vec, float(w)))
    return StateSpec(hg_basis(d), tuple(comps))


def random_bin_mixture(rank: int, d: int, rng: np.random.Generator) -> StateSpec:
    """Random rank-r mixture of the four fixed three-bin superpositions.

    The four pattern vectors span a 3-dimensional subspace, so rank <= 3.
    """
    if not 1 <= rank <= 3:
        raise ValueError("frequency-bin mixtures support ranks 1..3")
    if d < 7:
        raise ValueError("bin patterns need dimension >= 7")
    vecs = []
    for idxs, sgns in FREQ_BIN_PATTERNS:
        v = np.zeros(d, dtype=np.complex128)
        for i, s in zip(idxs, sgns):
            v[i] = s
        vecs.append(v / np.linalg.norm(v))
    for _ in range(1000):
        chosen = rng.choice(4, size=rank, replace=False)
        weights = _dirichlet_weights(rank, rng)
        comps = tuple((vecs[i], float(w)) for i, w in zip(chosen, weights))
        spec = StateSpec(frequency_bin_basis(d), comps)
        if numerical_rank(mixture(spec)) == rank:
            return spec
    raise RuntimeError("failed to draw a frequency-bin mixture of the requested rank")
