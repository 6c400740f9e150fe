import math

import numpy as np
import pytest

from conftest import random_density
from test_states import fig3_mixture, reference_rank2_bin_mixture
from tfrct import wigner
from tfrct.states import StateSpec, frequency_bin_basis, hg_basis, hg_pure_state, maximally_mixed, mixture
from tfrct.wigner import PhasePoint, associated_laguerre, export_u_matrix_real, wigner_grid, wigner_value
from tfrct import _phase_kernel_np


def laguerre_series_sum(n: int, k: int, x: float) -> float:
    """Direct finite-sum evaluation: sum_i (-1)^i C(n+k, n-i) x^i / i!."""
    total = 0.0
    for i in range(n + 1):
        total += (-1.0) ** i * math.comb(n + k, n - i) * x**i / math.factorial(i)
    return total


class TestLaguerre:
    @pytest.mark.parametrize("k", [0, 1, 5])
    @pytest.mark.parametrize("x", [0.0, 0.7, 3.5])
    def test_order_zero(self, k, x):
        assert associated_laguerre(0, k, x) == 1.0

    @pytest.mark.parametrize("k", [0, 2, 7])
    @pytest.mark.parametrize("x", [0.0, 1.3, 9.0])
    def test_order_one_closed_form(self, k, x):
        assert associated_laguerre(1, k, x) == pytest.approx(1 + k - x, abs=1e-14)

    def test_frozen_value(self):
        # series oracle gives L_3^{(2)}(1.5) = 0.0625
        assert laguerre_series_sum(3, 2, 1.5) == pytest.approx(0.0625, abs=1e-14)
        assert associated_laguerre(3, 2, 1.5) == pytest.approx(0.0625, abs=1e-10)

    @pytest.mark.parametrize("seed", range(6))
    def test_against_series_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n, k = int(rng.integers(0, 9)), int(rng.integers(0, 6))
        x = float(rng.uniform(0, 8))
        assert associated_laguerre(n, k, x) == pytest.approx(
            laguerre_series_sum(n, k, x), abs=1e-10
        )

    def test_array_argument(self):
        xs = np.linspace(0, 5, 7)
        out = associated_laguerre(2, 1, xs)
        assert np.allclose(out, [laguerre_series_sum(2, 1, x) for x in xs])


def closed_form_hg(n: int, t: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Single-mode closed form 2 (-1)^n e^{-y} L_n(2y), y = t^2 + w^2."""
    y = t**2 + w**2
    return 2.0 * (-1.0) ** n * np.exp(-y) * associated_laguerre(n, 0, 2.0 * y)


class TestWignerValue:
    def test_ground_mode_origin(self):
        assert wigner_value(hg_pure_state(0, 10), PhasePoint(0.0, 0.0)) == pytest.approx(2.0)

    def test_first_mode_origin(self):
        assert wigner_value(hg_pure_state(1, 10), PhasePoint(0.0, 0.0)) == pytest.approx(-2.0)

    def test_second_mode_closed_form(self):
        rho = hg_pure_state(2, 10)
        for t in (-1.5, 0.0, 0.8):
            for w in (-0.3, 0.6, 2.0):
                y = t * t + w * w
                expected = 2.0 * math.exp(-y) * (2 * y * y - 4 * y + 1)
                assert wigner_value(rho, PhasePoint(t, w)) == pytest.approx(expected, abs=1e-8)

    def test_rejects_frequency_bin(self):
        rho = mixture(
            StateSpec(frequency_bin_basis(4), ((np.eye(4, dtype=complex)[:, 0], 1.0),))
        )
        with pytest.raises(ValueError, match="HG"):
            wigner_value(rho, PhasePoint(0.0, 0.0))

    def test_phase_point_invariant(self):
        p = PhasePoint(0.3, -1.2)
        assert 2 * p.alpha_abs**2 == pytest.approx(p.y, abs=1e-12)


class TestWignerGrid:
    def test_normalization(self):
        grid = wigner_grid(hg_pure_state(0, 10))
        assert grid.normalization == pytest.approx(1.0, abs=1e-3)

    def test_rotational_symmetry(self):
        grid = wigner_grid(hg_pure_state(0, 10))
        assert np.allclose(grid.values, grid.values.T, atol=1e-9)

    def test_linearity_in_state(self):
        d = 10
        e0, e1 = np.eye(d, dtype=complex)[:, 0], np.eye(d, dtype=complex)[:, 1]
        mixed = mixture(StateSpec(hg_basis(d), ((e0, 0.5), (e1, 0.5))))
        g_mixed = wigner_grid(mixed, resolution=41)
        g0 = wigner_grid(hg_pure_state(0, d), resolution=41)
        g1 = wigner_grid(hg_pure_state(1, d), resolution=41)
        assert np.allclose(g_mixed.values, 0.5 * (g0.values + g1.values), atol=1e-10)

    @pytest.mark.parametrize("n", [0, 1, 2, 3])
    def test_pure_modes_match_closed_form(self, n):
        grid = wigner_grid(hg_pure_state(n, 10), resolution=61)
        tt, ww = np.meshgrid(grid.t_axis, grid.omega_axis, indexing="ij")
        assert np.allclose(grid.values, closed_form_hg(n, tt, ww), atol=1e-8)

    def test_grid_matches_pointwise_values(self):
        # grid kernel against the independent naive double-sum evaluator
        rng = np.random.default_rng(5)
        rho = random_density(6, rng)
        rho = type(rho)(rho.matrix, hg_basis(6))
        grid = wigner_grid(rho, t_range=(-2, 2), omega_range=(-1.5, 2.5), resolution=(7, 9))
        for i in (0, 3, 6):
            for j in (0, 4, 8):
                expected = wigner_value(rho, PhasePoint(grid.t_axis[i], grid.omega_axis[j]))
                assert grid.values[i, j] == pytest.approx(expected, abs=1e-10)

    @pytest.mark.parametrize("seed", [40, 41, 42])
    def test_bounded_by_two(self, seed):
        rng = np.random.default_rng(seed)
        rho = random_density(10, rng)
        rho = type(rho)(rho.matrix, hg_basis(10))
        grid = wigner_grid(rho, resolution=51)
        assert np.max(np.abs(grid.values)) <= 2.0 + 1e-9

    def test_normalization_for_mixture(self):
        grid = wigner_grid(fig3_mixture())
        assert grid.normalization == pytest.approx(1.0, abs=1e-3)

    def test_resolution_validation(self):
        with pytest.raises(ValueError, match="resolution"):
            wigner_grid(hg_pure_state(0, 4), resolution=1)

    def test_kernel_backends_agree(self):
        rng = np.random.default_rng(9)
        rho = random_density(8, rng)
        t_axis = np.linspace(-3, 3, 33)
        w_axis = np.linspace(-2, 2, 21)
        ref = _phase_kernel_np.wigner_grid_values(rho.matrix, t_axis, w_axis)
        try:
            from tfrct import _phase_kernel_cy
        except ImportError:
            pytest.skip("compiled kernel not built")
        fast = np.asarray(
            _phase_kernel_cy.wigner_grid_values(
                np.ascontiguousarray(rho.matrix), t_axis, w_axis
            )
        )
        assert np.allclose(fast, ref, atol=1e-12)


class TestUMatrixExport:
    def test_reference_superposition_pattern(self):
        rho = mixture(
            StateSpec(
                frequency_bin_basis(10),
                ((np.array([1, 0, 0, 1, 0, 0, 1, 0, 0, 0], dtype=complex) / math.sqrt(3), 1.0),),
            )
        )
        u = export_u_matrix_real(rho)
        for i in (0, 3, 6):
            for j in (0, 3, 6):
                assert u[i, j] == pytest.approx(1.0 / 3.0, abs=1e-15)
        assert np.allclose(u, u.T)

    def test_maximally_mixed_pattern(self):
        rho = maximally_mixed(5, frequency_bin_basis(5))
        assert np.allclose(export_u_matrix_real(rho), np.eye(5) / 5.0)

    def test_rank2_mixture_eigenvalues(self):
        u = export_u_matrix_real(reference_rank2_bin_mixture())
        w = np.sort(np.linalg.eigvalsh(u))[::-1][:2]
        assert np.allclose(w, [0.73, 0.27], atol=1e-9)

    def test_rejects_hg_state(self):
        with pytest.raises(ValueError, match="frequency-bin"):
            export_u_matrix_real(hg_pure_state(0, 4))
