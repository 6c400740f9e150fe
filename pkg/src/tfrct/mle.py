"""Maximum-likelihood mapping of raw click frequencies to physical probabilities.

Uses the diluted fixed-point ascent rho <- (1-eps) R rho R / norm + eps rho
with R = sum_j (w_j / p_j) |b_j><b_j|, where the dilution eps backtracks
toward the identity map until the log-likelihood is nondecreasing.  Iterates
stay PSD and unit trace by construction, so no projection step is needed.

The fixed-point map has a slow tail whenever the maximizer touches the PSD
boundary, so once the ascent plateaus a single exact-fit polish is
attempted: if some state reproduces the measured frequencies exactly (always
true for consistent data), that state is a global maximizer, and one conic
feasibility solve finds it.  The polish is kept only when it does not lower
the likelihood, so the recorded ascent stays monotone either way.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import sdp
from .measurement import CountRecord, MeasurementBasis
from .states import DensityMatrix, maximally_mixed

LIKELIHOOD_FLOOR = 1e-14

MeasuredData = Sequence[tuple[MeasurementBasis, CountRecord]]


@dataclass(frozen=True)
class MlOptions:
    gain_tol: float = 1e-10       # stop when a sweep improves less than this
    max_iterations: int = 100_000
    fit_tol: float = 1e-13        # early exit once p matches the data exactly
    polish_at: int = 100          # iteration at which the exact-fit polish runs
    truncate_every: int = 250     # cadence of the guarded spectrum truncation


@dataclass(frozen=True)
class MlResult:
    rho_ml: DensityMatrix
    p_hat: np.ndarray             # (n_bases, d) Born probabilities of rho_ml
    log_likelihood: float
    iterations: int
    converged: bool
    history: np.ndarray = None    # accepted log-likelihood values, nondecreasing


def _stack_data(data: MeasuredData):
    """Flatten data into bra rows, per-outcome weights and target frequencies."""
    if not data:
        raise ValueError("at least one measured basis is required")
    kets, weights, freqs = [], [], []
    d = data[0][0].dim
    for basis, record in data:
        if basis.dim != d:
            raise ValueError("all bases must share one dimension")
        kets.append(basis.vectors.T)                      # rows are |b_l>
        weights.append(record.total * record.frequencies)
        freqs.append(record.frequencies)
    return np.vstack(kets), np.concatenate(weights), np.concatenate(freqs), d


def _born_rows(kets: np.ndarray, rho: np.ndarray) -> np.ndarray:
    return np.real(np.einsum("ja,ab,jb->j", kets.conj(), rho, kets))


def log_likelihood(rho: DensityMatrix, data: MeasuredData) -> float:
    """sum_j w_j log(max(p_j, floor)) over every outcome of every basis."""
    kets, weights, _, d = _stack_data(data)
    if rho.dim != d:
        raise ValueError("state dimension does not match the data")
    p = _born_rows(kets, rho.matrix)
    return float(weights @ np.log(np.maximum(p, LIKELIHOOD_FLOOR)))


def _exact_fit_candidate(kets, freqs, d, current) -> np.ndarray | None:
    """A state reproducing the frequencies exactly, or None if none exists."""
    mats = [np.eye(d, dtype=np.complex128)]
    vals = [1.0]
    for row, nu in zip(kets, freqs):
        mats.append(np.outer(row, row.conj()))
        vals.append(float(nu))
    red = sdp.reduce_hermitian_equalities(mats, vals)
    if red.residual > 1e-9:
        return None
    # The min-norm affine solution satisfies the equalities to machine
    # precision; when it happens to be PSD (always, e.g., for a single
    # basis) it is the cheapest exact fit.
    cand = sdp.hermitian_from_coords(red.particular, d)
    cand = 0.5 * (cand + cand.conj().T)
    if float(np.linalg.eigvalsh(cand)[0]) < -1e-12 and red.rank < d * d:
        x0 = sdp.embed_hermitian(0.999 * current + 0.001 * np.eye(d) / d)
        a_embed = np.array([sdp.embed_hermitian(m) / 2.0 for m in red.matrices])
        try:
            sol = sdp.solve_sdp(
                c_psd=np.zeros((2 * d, 2 * d)), a_psd=a_embed, b=red.rhs, x0_psd=x0
            )
        except np.linalg.LinAlgError:
            return None
        if sol.pinfeas > 1e-9:
            return None
        cand = sdp.unembed_hermitian(sol.x_psd)
    smallest = float(np.linalg.eigvalsh(cand)[0])
    if smallest < -1e-9:
        return None
    if smallest < 0.0:
        w, v = np.linalg.eigh(cand)
        cand = (v * np.clip(w, 0.0, None)) @ v.conj().T
    return cand / np.real(np.trace(cand))


def maximize_likelihood(
    data: MeasuredData,
    options: MlOptions | None = None,
    initial: DensityMatrix | None = None,
) -> MlResult:
    """Monotone likelihood ascent over the state space.

    Starts from the maximally mixed state unless a full-rank warm start is
    given.  Returns converged=False when the iteration cap is reached; the
    last iterate is still a valid state.
    """
    opts = options or MlOptions()
    kets, weights, freqs, d = _stack_data(data)
    total_weight = weights.sum()
    rho = (initial or maximally_mixed(d)).matrix.copy()

    p = _born_rows(kets, rho)
    loglik = float(weights @ np.log(np.maximum(p, LIKELIHOOD_FLOOR)))
    history = [loglik]
    iterations = 0
    converged = False
    polished = False

    def try_polish():
        nonlocal rho, p, loglik, polished
        polished = True
        cand = _exact_fit_candidate(kets, freqs, d, rho)
        if cand is None:
            return False
        p_cand = _born_rows(kets, cand)
        loglik_cand = float(weights @ np.log(np.maximum(p_cand, LIKELIHOOD_FLOOR)))
        if loglik_cand < loglik:
            return False
        rho, p, loglik = cand, p_cand, loglik_cand
        history.append(loglik)
        return True

    for iterations in range(1, opts.max_iterations + 1):
        if np.max(np.abs(p - freqs)) < opts.fit_tol:
            converged = True
            iterations -= 1
            break
        if iterations >= opts.polish_at and not polished:
            try_polish()
            continue
        ratio = weights / np.maximum(p, LIKELIHOOD_FLOOR)
        r_op = (kets.T * ratio) @ kets.conj() / total_weight
        rr = r_op @ rho @ r_op
        rr /= np.real(np.trace(rr))

        accepted = False
        eps = 0.0
        for _ in range(30):
            cand = (1.0 - eps) * rr + eps * rho
            cand = 0.5 * (cand + cand.conj().T)
            p_cand = _born_rows(kets, cand)
            loglik_cand = float(weights @ np.log(np.maximum(p_cand, LIKELIHOOD_FLOOR)))
            if loglik_cand >= loglik:
                accepted = True
                break
            eps = 0.5 if eps == 0.0 else 0.5 * (1.0 + eps)
        if not accepted:
            if not polished and try_polish():
                continue
            converged = True  # no admissible step: stationary point
            break
        gain = loglik_cand - loglik
        rho, p, loglik = cand, p_cand, loglik_cand
        history.append(loglik)
        if opts.truncate_every and iterations % opts.truncate_every == 0:
            # Boundary maximizers make the fixed point crawl while small
            # eigenvalues decay; zeroing them outright is accepted whenever
            # it does not cost likelihood.
            w, v = np.linalg.eigh(rho)
            for thr in (1e-4, 1e-6, 1e-8, 1e-10):
                w_cut = np.where(w > thr, w, 0.0)
                total = w_cut.sum()
                if total <= 0 or np.array_equal(w_cut, w):
                    continue
                cand = (v * (w_cut / total)) @ v.conj().T
                p_cand = _born_rows(kets, cand)
                loglik_cand = float(
                    weights @ np.log(np.maximum(p_cand, LIKELIHOOD_FLOOR))
                )
                if loglik_cand >= loglik:
                    rho, p, loglik = cand, p_cand, loglik_cand
                    history.append(loglik)
        if gain < opts.gain_tol:
            if not polished and try_polish():
                continue
            converged = True
            break

    history_arr = np.array(history)
    assert np.all(np.diff(history_arr) >= 0), "likelihood ascent lost monotonicity"
    state = DensityMatrix(rho, (initial.basis if initial else maximally_mixed(d).basis))
    p_hat = _born_rows(kets, state.matrix).reshape(len(data), -1)
    return MlResult(
        rho_ml=state,
        p_hat=p_hat,
        log_likelihood=loglik,
        iterations=iterations,
        converged=converged,
        history=history_arr,
    )
