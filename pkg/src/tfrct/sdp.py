"""Dense primal-dual interior-point solver for small semidefinite programs.

Solves the conic pair

    min <C, X>  s.t.  <A_i, X> = b_i,  X in K
    max b.y     s.t.  C - sum_i y_i A_i = S in K

over K = (real symmetric PSD block of size n) x (nonnegative orthant of
size l), using Nesterov-Todd scaling with a Mehrotra predictor-corrector
and an infeasible start.  Problem sizes here are tiny (n <= ~64, a few
hundred constraints), so everything is dense and refactorized each
iteration.

Complex Hermitian problems enter through the real symmetric embedding
T(A) = [[Re A, -Im A], [Im A, Re A]]; with data scaled by 1/2 on the dual
side the embedded inner products reproduce complex-side traces.  Iterates
may pick up components orthogonal to the embedded subspace near degenerate
optima, but unembedding projects them away: that projection is an average
over a PSD-preserving conjugation and the data never couple to the
complement, so the recovered complex solution keeps feasibility, cone
membership and the objective value exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class SdpFailure(RuntimeError):
    """Solver could not certify optimality; carries gap diagnostics."""

    def __init__(self, message: str, gap: float, pinfeas: float, dinfeas: float):
        super().__init__(message)
        self.gap = gap
        self.pinfeas = pinfeas
        self.dinfeas = dinfeas


# ---------------------------------------------------------------------------
# Hermitian <-> real coordinatizations


def embed_hermitian(a: np.ndarray) -> np.ndarray:
    """Real symmetric embedding of a complex Hermitian matrix (doubles size)."""
    re, im = a.real, a.imag
    return np.block([[re, -im], [im, re]])


def unembed_hermitian(x: np.ndarray) -> np.ndarray:
    """Inverse of embed_hermitian, averaging over the redundant blocks."""
    d = x.shape[0] // 2
    re = 0.5 * (x[:d, :d] + x[d:, d:])
    im = 0.5 * (x[d:, :d] - x[:d, d:])
    m = re + 1j * im
    return 0.5 * (m + m.conj().T)


def hermitian_coords(a: np.ndarray) -> np.ndarray:
    """Isometric real coordinates of a Hermitian matrix (length d^2)."""
    d = a.shape[0]
    iu = np.triu_indices(d, k=1)
    return np.concatenate(
        [a.diagonal().real, np.sqrt(2.0) * a[iu].real, np.sqrt(2.0) * a[iu].imag]
    )


def hermitian_from_coords(v: np.ndarray, d: int) -> np.ndarray:
    iu = np.triu_indices(d, k=1)
    n_off = iu[0].size
    m = np.zeros((d, d), dtype=np.complex128)
    m[np.diag_indices(d)] = v[:d]
    off = (v[d : d + n_off] + 1j * v[d + n_off :]) / np.sqrt(2.0)
    m[iu] = off
    m[(iu[1], iu[0])] = off.conj()
    return m


@dataclass(frozen=True)
class EqualityReduction:
    """Orthonormalized span of Hermitian equality constraints.

    matrices/rhs describe the same affine set as the input; particular is
    the least-squares solution in hermitian_coords space and residual its
    worst constraint violation (nonzero means the system is inconsistent).
    """

    matrices: np.ndarray   # (rank, d, d) complex Hermitian
    rhs: np.ndarray
    particular: np.ndarray
    rank: int
    residual: float


def reduce_hermitian_equalities(mats, vals) -> EqualityReduction:
    """Drop redundant constraints tr(M_i rho) = v_i by SVD orthonormalization."""
    d = mats[0].shape[0]
    rows = np.array([hermitian_coords(m) for m in mats])
    vals = np.asarray(vals, dtype=float)
    _, sing, vt = np.linalg.svd(rows, full_matrices=False)
    rank_tol = max(rows.shape) * np.finfo(float).eps * (sing[0] if sing.size else 0.0)
    rank = int(np.sum(sing > rank_tol))
    particular, *_ = np.linalg.lstsq(rows, vals, rcond=None)
    resid = rows @ particular - vals
    basis_rows = vt[:rank]
    return EqualityReduction(
        matrices=np.array([hermitian_from_coords(r, d) for r in basis_rows]),
        rhs=basis_rows @ particular,
        particular=particular,
        rank=rank,
        residual=float(np.max(np.abs(resid))) if resid.size else 0.0,
    )


# ---------------------------------------------------------------------------
# Solver


@dataclass(frozen=True)
class SdpSolution:
    x_psd: np.ndarray
    x_lin: np.ndarray
    y: np.ndarray
    s_psd: np.ndarray
    s_lin: np.ndarray
    primal_objective: float
    dual_objective: float
    gap: float
    pinfeas: float
    dinfeas: float
    iterations: int
    status: str  # "optimal", "stalled", "breakdown" or "max_iterations"


def _sym(a):
    return 0.5 * (a + a.T)


def _sqrt_and_inv_sqrt(a):
    w, v = np.linalg.eigh(a)
    w = np.clip(w, 1e-300, None)
    rw = np.sqrt(w)
    return (v * rw) @ v.T, (v / rw) @ v.T


def _nt_scaling(x, s):
    """NT scaling W (the PD matrix with W S W = X) plus its square roots
    and the scaled point lam = W^{1/2} S W^{1/2} = W^{-1/2} X W^{-1/2}."""
    sqrt_s, isqrt_s = _sqrt_and_inv_sqrt(s)
    inner, _ = _sqrt_and_inv_sqrt(sqrt_s @ x @ sqrt_s)
    w = _sym(isqrt_s @ inner @ isqrt_s)
    sqrt_w, isqrt_w = _sqrt_and_inv_sqrt(w)
    lam = _sym(sqrt_w @ s @ sqrt_w)
    return w, sqrt_w, isqrt_w, lam


def _psd_step_bound(x, dx):
    """Largest t with x + t*dx PSD (np.inf if unbounded)."""
    try:
        chol = np.linalg.cholesky(x)
    except np.linalg.LinAlgError:
        w, v = np.linalg.eigh(x)
        chol = v * np.sqrt(np.clip(w, 1e-300, None))
    m = np.linalg.solve(chol, np.linalg.solve(chol, dx).T)
    lam = np.linalg.eigvalsh(_sym(m))[0]
    return np.inf if lam >= 0 else 1.0 / (-lam)


def _lin_step_bound(x, dx):
    neg = dx < 0
    if not np.any(neg):
        return np.inf
    return float(np.min(-x[neg] / dx[neg]))


def _solve_spd(m, rhs):
    ridge = 0.0
    base = np.trace(m) / m.shape[0]
    for _ in range(4):
        try:
            chol = np.linalg.cholesky(m + ridge * np.eye(m.shape[0]))
            z = np.linalg.solve(chol, rhs)
            return np.linalg.solve(chol.T, z)
        except np.linalg.LinAlgError:
            ridge = max(ridge * 100.0, 1e-14 * max(base, 1.0))
    return np.linalg.lstsq(m, rhs, rcond=None)[0]


def solve_sdp(
    c_psd: np.ndarray,
    a_psd: np.ndarray,
    b: np.ndarray,
    a_lin: np.ndarray | None = None,
    c_lin: np.ndarray | None = None,
    x0_psd: np.ndarray | None = None,
    x0_lin: np.ndarray | None = None,
    gap_tol: float = 1e-9,
    feas_tol: float = 1e-9,
    max_iterations: int = 100,
    step_fraction: float = 0.98,
) -> SdpSolution:
    """Run the interior-point iteration on one conic problem.

    a_psd has shape (m, n, n) with symmetric slices; a_lin, if given, has
    shape (m, l).  x0_psd may be any strictly positive definite warm start;
    equality residuals of the start are handled by the infeasible-start
    mechanics.  Numerical breakdown returns the best iterate seen with
    status "breakdown" instead of raising.
    """
    n = c_psd.shape[0]
    m = a_psd.shape[0]
    a_lin = np.zeros((m, 0)) if a_lin is None else np.asarray(a_lin, dtype=float)
    n_lin = a_lin.shape[1]
    c_lin = np.zeros(n_lin) if c_lin is None else np.asarray(c_lin, dtype=float)
    b = np.asarray(b, dtype=float)
    nu = n + n_lin

    a_flat = a_psd.reshape(m, n * n)

    x = np.eye(n) if x0_psd is None else _sym(np.asarray(x0_psd, dtype=float))
    floor = 1e-8
    lam_min = np.linalg.eigvalsh(x)[0]
    if lam_min < floor:
        x = x + (floor - lam_min) * np.eye(n)
    xl = np.ones(n_lin) if x0_lin is None else np.clip(np.asarray(x0_lin, float), 1e-6, None)

    s_scale = 1.0 + np.linalg.norm(c_psd)
    s = s_scale * np.eye(n)
    sl = np.full(n_lin, s_scale)
    y = np.zeros(m)

    b_norm = 1.0 + np.linalg.norm(b)
    c_norm = 1.0 + np.sqrt(np.linalg.norm(c_psd) ** 2 + np.linalg.norm(c_lin) ** 2)

    def operator(x_mat, x_vec):
        return a_flat @ x_mat.reshape(-1) + a_lin @ x_vec

    def adjoint(y_vec):
        return np.tensordot(y_vec, a_psd, axes=1), a_lin.T @ y_vec

    def residuals(x, xl, y, s, sl):
        rp = b - operator(x, xl)
        at_y, at_y_lin = adjoint(y)
        rd = c_psd - s - at_y
        rdl = c_lin - sl - at_y_lin
        gap = float(np.sum(x * s) + xl @ sl)
        pinf = float(np.linalg.norm(rp) / b_norm)
        dinf = float(
            np.sqrt(np.linalg.norm(rd) ** 2 + np.linalg.norm(rdl) ** 2) / c_norm
        )
        return rp, rd, rdl, gap, pinf, dinf

    status = "max_iterations"
    history: list[float] = []
    best = None  # best-merit snapshot, restored on breakdown
    it = 0
    # Overflow near breakdown is handled by the finite-merit guard, not
    # by warnings.
    np_err = np.seterr(over="ignore", invalid="ignore", divide="ignore")
    for it in range(1, max_iterations + 1):
        rp, rd, rdl, gap, pinfeas, dinfeas = residuals(x, xl, y, s, sl)
        merit = gap + pinfeas + dinfeas
        if not np.isfinite(merit):
            status = "breakdown"
            it -= 1
            break
        if best is None or merit < best[0]:
            best = (merit, x.copy(), xl.copy(), y.copy(), s.copy(), sl.copy())
        if gap <= gap_tol and pinfeas <= feas_tol and dinfeas <= feas_tol:
            status = "optimal"
            it -= 1
            break
        history.append(merit)
        if len(history) > 8 and merit > 0.98 * history[-9]:
            status = "stalled"
            it -= 1
            break

        try:
            mu = gap / nu
            w_nt, sqrt_w, isqrt_w, lam = _nt_scaling(x, s)
            wl = np.sqrt(xl / sl) if n_lin else xl
            w2l = wl * wl
            lam_w, lam_v = np.linalg.eigh(lam)
            lam_w = np.clip(lam_w, 1e-300, None)
            lyap_div = 0.5 * (lam_w[:, None] + lam_w[None, :])

            def scaled_rc_to_rhs(rc_scaled):
                # L^{-1} of the Jordan product with lam, in lam's eigenbasis
                m_t = lam_v.T @ rc_scaled @ lam_v
                m_t = m_t / lyap_div
                return _sym(sqrt_w @ (lam_v @ m_t @ lam_v.T) @ sqrt_w)

            wa_w = np.einsum("ab,jbc,cd->jad", w_nt, a_psd, w_nt, optimize=True)
            schur = a_flat @ wa_w.reshape(m, n * n).T
            if n_lin:
                schur = schur + (a_lin * w2l) @ a_lin.T
            schur = _sym(schur)

            def newton(rc_mat, rc_vec):
                rhs = rp - operator(rc_mat - w_nt @ rd @ w_nt, rc_vec - w2l * rdl)
                dy = _solve_spd(schur, rhs)
                ds_mat, ds_vec = adjoint(dy)
                ds = rd - ds_mat
                dsl = rdl - ds_vec
                dx = _sym(rc_mat - w_nt @ ds @ w_nt)
                dxl = rc_vec - w2l * dsl
                return dx, dxl, dy, ds, dsl

            # Predictor
            dx_a, dxl_a, dy_a, ds_a, dsl_a = newton(-x, -xl)
            ap = min(
                1.0,
                step_fraction * _psd_step_bound(x, dx_a),
                step_fraction * _lin_step_bound(xl, dxl_a),
            )
            ad = min(
                1.0,
                step_fraction * _psd_step_bound(s, ds_a),
                step_fraction * _lin_step_bound(sl, dsl_a),
            )
            gap_aff = float(
                np.sum((x + ap * dx_a) * (s + ad * ds_a))
                + (xl + ap * dxl_a) @ (sl + ad * dsl_a)
            )
            sigma = min(max((gap_aff / gap) ** 3, 1e-8), 0.99)

            # Corrector, formed in the scaled space where both cone
            # variables coincide with lam.
            dx_sc = isqrt_w @ dx_a @ isqrt_w
            ds_sc = sqrt_w @ ds_a @ sqrt_w
            corr = 0.5 * (dx_sc @ ds_sc + ds_sc @ dx_sc)
            rc_scaled = sigma * mu * np.eye(n) - lam @ lam - corr
            rc_mat = scaled_rc_to_rhs(rc_scaled)
            rc_vec = sigma * mu / sl - xl - dxl_a * dsl_a / sl if n_lin else xl[:0]
            dx, dxl, dy, ds, dsl = newton(rc_mat, rc_vec)

            ap = min(
                1.0,
                step_fraction * _psd_step_bound(x, dx),
                step_fraction * _lin_step_bound(xl, dxl),
            )
            ad = min(
                1.0,
                step_fraction * _psd_step_bound(s, ds),
                step_fraction * _lin_step_bound(sl, dsl),
            )
            x = _sym(x + ap * dx)
            xl = xl + ap * dxl
            y = y + ad * dy
            s = _sym(s + ad * ds)
            sl = sl + ad * dsl
        except (np.linalg.LinAlgError, FloatingPointError):
            status = "breakdown"
            break

    np.seterr(**np_err)
    if status == "breakdown" and best is not None:
        _, x, xl, y, s, sl = best

    rp, rd, rdl, gap, pinfeas, dinfeas = residuals(x, xl, y, s, sl)
    if status != "optimal" and gap <= gap_tol and pinfeas <= feas_tol and dinfeas <= feas_tol:
        status = "optimal"
    return SdpSolution(
        x_psd=x,
        x_lin=xl,
        y=y,
        s_psd=s,
        s_lin=sl,
        primal_objective=float(np.sum(c_psd * x) + c_lin @ xl),
        dual_objective=float(b @ y),
        gap=gap,
        pinfeas=pinfeas,
        dinfeas=dinfeas,
        iterations=it,
        status=status,
    )
