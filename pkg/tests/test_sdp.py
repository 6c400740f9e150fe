import numpy as np
import pytest

from conftest import bloch_constrained_extrema, random_density
from tfrct import sdp
from tfrct.measurement import haar_unitary, born_probabilities
from tfrct.states import maximally_mixed


class TestEmbedding:
    def test_roundtrip(self, rng):
        g = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
        a = 0.5 * (g + g.conj().T)
        assert np.allclose(sdp.unembed_hermitian(sdp.embed_hermitian(a)), a, atol=1e-15)

    def test_embedding_is_symmetric_and_spectrum_doubles(self, rng):
        g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a = 0.5 * (g + g.conj().T)
        t = sdp.embed_hermitian(a)
        assert np.allclose(t, t.T)
        w_a = np.linalg.eigvalsh(a)
        w_t = np.linalg.eigvalsh(t)
        assert np.allclose(np.repeat(w_a, 2), w_t, atol=1e-12)

    def test_trace_inner_products(self, rng):
        g1 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        g2 = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        a, b = 0.5 * (g1 + g1.conj().T), 0.5 * (g2 + g2.conj().T)
        lhs = np.sum(sdp.embed_hermitian(a) * (sdp.embed_hermitian(b) / 2.0))
        assert lhs == pytest.approx(np.real(np.trace(a @ b)), abs=1e-12)

    def test_coords_isometry(self, rng):
        g1 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        g2 = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        a, b = 0.5 * (g1 + g1.conj().T), 0.5 * (g2 + g2.conj().T)
        assert sdp.hermitian_coords(a) @ sdp.hermitian_coords(b) == pytest.approx(
            np.real(np.trace(a @ b)), abs=1e-12
        )
        assert np.allclose(sdp.hermitian_from_coords(sdp.hermitian_coords(a), 4), a)


class TestEqualityReduction:
    def test_detects_per_basis_redundancy(self, rng):
        # the d outcome projectors of one basis plus the trace constraint
        # span only d independent directions
        d = 4
        basis = haar_unitary(d, rng)
        mats = [np.eye(d, dtype=complex)]
        vals = [1.0]
        p = born_probabilities(random_density(d, rng), basis)
        for l in range(d):
            v = basis.vector(l)
            mats.append(np.outer(v, v.conj()))
            vals.append(p[l])
        red = sdp.reduce_hermitian_equalities(mats, vals)
        assert red.rank == d
        assert red.residual < 1e-12

    def test_inconsistent_system_has_residual(self):
        d = 2
        mats = [np.eye(d, dtype=complex), np.eye(d, dtype=complex)]
        red = sdp.reduce_hermitian_equalities(mats, [1.0, 0.5])
        assert red.residual > 0.2

    def test_full_rank_recovers_unique_solution(self, rng):
        d = 2
        rho = random_density(d, rng)
        mats = [np.eye(d, dtype=complex)]
        vals = [1.0]
        for basis in [haar_unitary(d, rng) for _ in range(3)]:
            p = born_probabilities(rho, basis)
            for l in range(d):
                v = basis.vector(l)
                mats.append(np.outer(v, v.conj()))
                vals.append(p[l])
        red = sdp.reduce_hermitian_equalities(mats, vals)
        assert red.rank == d * d
        rebuilt = sdp.hermitian_from_coords(red.particular, d)
        assert np.allclose(rebuilt, rho.matrix, atol=1e-10)


def _state_extrema_problem(z, bases, probs, x0_rho):
    """Assemble min tr(rho z) over states matching the probabilities."""
    d = z.shape[0]
    mats = [np.eye(d, dtype=complex)]
    vals = [1.0]
    for basis, p in zip(bases, probs):
        for l in range(d):
            v = basis.vector(l)
            mats.append(np.outer(v, v.conj()))
            vals.append(float(p[l]))
    red = sdp.reduce_hermitian_equalities(mats, vals)
    a_embed = np.array([sdp.embed_hermitian(m) / 2.0 for m in red.matrices])
    return a_embed, red.rhs, sdp.embed_hermitian(x0_rho)


class TestSolver:
    def test_spectral_extrema_without_data(self, rng):
        # only the trace constraint: extrema are the extreme eigenvalues
        d = 3
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        z = 0.5 * (g + g.conj().T)
        a_embed = np.array([sdp.embed_hermitian(np.eye(d, dtype=complex)) / 2.0])
        c = sdp.embed_hermitian(z) / 2.0
        lo = sdp.solve_sdp(c, a_embed, np.array([1.0]))
        hi = sdp.solve_sdp(-c, a_embed, np.array([1.0]))
        w = np.linalg.eigvalsh(z)
        assert lo.primal_objective == pytest.approx(w[0], abs=1e-7)
        assert -hi.primal_objective == pytest.approx(w[-1], abs=1e-7)
        assert lo.gap < 1e-7 and hi.gap < 1e-7

    @pytest.mark.parametrize("seed", [3, 7, 11, 19])
    @pytest.mark.parametrize("n_bases", [1, 2])
    def test_qubit_extrema_match_bloch_scan(self, seed, n_bases):
        rng = np.random.default_rng(seed)
        rho = random_density(2, rng)
        bases = [haar_unitary(2, rng) for _ in range(n_bases)]
        probs = [born_probabilities(rho, b) for b in bases]
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        z = 0.5 * (g + g.conj().T)
        a_embed, rhs, x0 = _state_extrema_problem(z, bases, probs, rho.matrix)
        c = sdp.embed_hermitian(z) / 2.0
        lo = sdp.solve_sdp(c, a_embed, rhs, x0_psd=x0)
        hi = sdp.solve_sdp(-c, a_embed, rhs, x0_psd=x0)
        o_min, o_max = bloch_constrained_extrema(z, bases, probs)
        assert lo.primal_objective == pytest.approx(o_min, abs=2e-3)
        assert -hi.primal_objective == pytest.approx(o_max, abs=2e-3)
        assert max(lo.gap, hi.gap) < 1e-7

    def test_band_mode_with_vacuous_bands_reaches_spectrum(self, rng):
        # bands so wide the probability constraints never bind
        d = 2
        basis = haar_unitary(d, rng)
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        z = 0.5 * (g + g.conj().T)
        a_psd = [sdp.embed_hermitian(np.eye(d, dtype=complex)) / 2.0]
        b = [1.0]
        a_lin_rows = [np.zeros(4)]
        x0_lin = []
        for j in range(d):
            v = basis.vector(j)
            emb = sdp.embed_hermitian(np.outer(v, v.conj())) / 2.0
            a_psd.extend([emb, emb])
            b.extend([0.5 + 2.0, 0.5 - 2.0])
            row_u, row_v = np.zeros(4), np.zeros(4)
            row_u[2 * j] = 1.0
            row_v[2 * j + 1] = -1.0
            a_lin_rows.extend([row_u, row_v])
            x0_lin.extend([2.0, 2.0])
        sol = sdp.solve_sdp(
            sdp.embed_hermitian(z) / 2.0,
            np.array(a_psd),
            np.array(b),
            a_lin=np.array(a_lin_rows),
            x0_psd=np.eye(4) / 2.0,
            x0_lin=np.array(x0_lin),
        )
        assert sol.primal_objective == pytest.approx(np.linalg.eigvalsh(z)[0], abs=1e-6)
        assert sol.gap < 1e-7

    def test_unembedded_solution_is_valid_state(self, rng):
        # complement leakage near degenerate optima must project away
        # without losing feasibility, positivity or the objective value
        d = 3
        rho = random_density(d, rng)
        bases = [haar_unitary(d, rng)]
        probs = [born_probabilities(rho, b) for b in bases]
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        z = 0.5 * (g + g.conj().T)
        a_embed, rhs, x0 = _state_extrema_problem(z, bases, probs, rho.matrix)
        sol = sdp.solve_sdp(sdp.embed_hermitian(z) / 2.0, a_embed, rhs, x0_psd=x0)
        back = sdp.unembed_hermitian(sol.x_psd)
        assert abs(np.real(np.trace(back)) - 1.0) < 1e-8
        assert np.linalg.eigvalsh(back)[0] > -1e-9
        assert np.real(np.trace(back @ z)) == pytest.approx(sol.primal_objective, abs=1e-9)
        for basis, p in zip(bases, probs):
            for l in range(d):
                v = basis.vector(l)
                assert np.real(v.conj() @ back @ v) == pytest.approx(p[l], abs=1e-7)
