import numpy as np
import pytest

from smalleig.errors import InstabilityError, WindowCountError
from smalleig.hermite import BasisSpec
from smalleig.linalg import eigh
from smalleig.spectrum import (ModelParams, SmallEigenConfig, assemble,
                               eigenpairs_converged, sigma_set,
                               small_eigenvalue, sweep_fit, _lowest_values)


class TestAssemble:
    def test_harmonic_case_is_diagonal(self):
        basis = BasisSpec(16)
        mat = assemble(ModelParams(2, "+", 0.0, (), 1.0), 0.0, basis)
        off = mat.entries - np.diag(np.diagonal(mat.entries))
        assert np.abs(off).max() < 1e-14
        assert np.allclose(np.diagonal(mat.entries), 2 * np.arange(16) + 1)

    def test_shifted_harmonic_spectrum(self):
        pairs, _ = eigenpairs_converged(ModelParams(2, "+", -1.0, (), 1.0), 0.0, 5)
        assert np.allclose([p.value for p in pairs], [0, 2, 4, 6, 8], atol=1e-10)

    @pytest.mark.parametrize("m", [2, 3, 4, 5, 6])
    def test_zero_constant_operator_positive(self, m):
        vals = _lowest_values(ModelParams(m, "+", 0.0), 0.0, 256, 1)
        assert vals[0] > 0.0

    def test_branch_sign_flips_coupling(self):
        basis = BasisSpec(32)
        plus = assemble(ModelParams(3, "+", 2.0), 0.0, basis).entries
        minus = assemble(ModelParams(3, "-", -2.0), 0.0, basis).entries
        assert np.array_equal(plus, minus)

    def test_unstable_truncation_rejected(self):
        # odd top power with a large weight turns the potential over
        params = ModelParams(2, "+", 0.0, (0.0, 0.0, -500.0))
        with pytest.raises(InstabilityError):
            assemble(params, 1.0, BasisSpec(64))


class TestEigenpairsConverged:
    def test_harmonic_values(self):
        pairs, basis = eigenpairs_converged(ModelParams(2, "+", 0.0), 0.0, 3)
        assert np.allclose([p.value for p in pairs], [1, 3, 5], atol=1e-8)
        assert basis.dim >= 64

    def test_quartic_ground_state_positive(self):
        pairs, _ = eigenpairs_converged(ModelParams(3, "+", 0.0), 0.0, 1)
        assert pairs[0].value > 0.0

    def test_deterministic(self):
        a = eigenpairs_converged(ModelParams(3, "+", -1.0), 0.0, 4)
        b = eigenpairs_converged(ModelParams(3, "+", -1.0), 0.0, 4)
        assert [p.value for p in a[0]] == [p.value for p in b[0]]
        assert all(np.array_equal(p.vector, q.vector)
                   for p, q in zip(a[0], b[0]))

    def test_rejects_bad_count(self):
        with pytest.raises(ValueError):
            eigenpairs_converged(ModelParams(2, "+", 0.0), 0.0, 0)


class TestSigmaSet:
    def test_quadratic_anchor(self):
        ss = sigma_set(2, "+", (-8.0, 0.0), tol=1e-8)
        assert np.allclose(ss.elements, [-7.0, -5.0, -3.0, -1.0], atol=1e-6)

    @pytest.mark.parametrize("m,window", [(2, (-6.0, 0.0)), (4, (-2.5, 0.0))])
    def test_even_m_elements_negative(self, m, window):
        ss = sigma_set(m, "+", window, tol=1e-8)
        assert ss.elements and all(e < 0 for e in ss.elements)

    def test_odd_m_branches_mirror(self):
        plus = sigma_set(3, "+", (-5.0, 5.0), tol=1e-8)
        minus = sigma_set(3, "-", (-5.0, 5.0), tol=1e-8)
        assert np.allclose(plus.elements, sorted(-e for e in minus.elements),
                           atol=1e-7)
        # the set is also symmetric in itself
        assert np.allclose(plus.elements, sorted(-e for e in plus.elements),
                           atol=1e-7)

    def test_stable_under_basis_doubling(self):
        ss = sigma_set(2, "+", (-4.0, 0.0), tol=1e-8)
        params = ModelParams(2, "+", 0.0)
        dim2 = 2 * ss.basis_used.dim
        for elem in ss.elements:
            vals = _lowest_values(params.with_alpha(elem), 0.0, dim2, 4)
            # an element stays an eigenvalue crossing: some value ~ 0
            assert np.abs(vals).min() < 1e-6

    def test_principal_element(self):
        ss = sigma_set(3, "+", (-5.0, 5.0), tol=1e-8)
        assert abs(abs(ss.principal()) - 1.5) < 1e-6

    def test_m3_threshold_confirmed_by_finite_differences(self):
        # independent discretization: the found constant really is singular
        from scipy.linalg import eigh_tridiagonal

        alpha = sigma_set(3, "+", (0.0, 3.0), tol=1e-8).principal()
        n = 6000
        grid = np.linspace(-10.0, 10.0, n)
        h = grid[1] - grid[0]
        diag = 2.0 / h ** 2 + grid ** 4 + 2.0 * alpha * grid
        off = np.full(n - 1, -1.0 / h ** 2)
        vals = eigh_tridiagonal(diag, off, select="v",
                                select_range=(-1.0, 1.0), eigvals_only=True)
        assert np.abs(vals).min() < 1e-4

    def test_close_curves_refine_then_fail(self):
        # a tolerance wider than the curve spacing cannot be tracked
        from smalleig.errors import CrossingAmbiguityError
        with pytest.raises(CrossingAmbiguityError):
            sigma_set(2, "+", (-1.5, -0.5), tol=0.3)

    def test_sigma_set_invariants_enforced(self):
        from smalleig.spectrum import SigmaSet
        basis = BasisSpec(64)
        with pytest.raises(ValueError, match="discreteness"):
            SigmaSet(2, "+", (-1.0, -1.0 + 1e-9), (-2.0, 0.0), 1e-8, basis)
        with pytest.raises(ValueError, match="sign"):
            SigmaSet(2, "+", (0.5,), (0.0, 1.0), 1e-8, basis)


class TestSmallEigenvalue:
    def test_zero_at_threshold(self):
        lam = small_eigenvalue(ModelParams(2, "+", -1.0), 0.0)
        assert abs(lam) < 1e-7

    def test_constant_coefficient_stays_zero(self):
        params = ModelParams(2, "+", -1.0, ())
        for eps in (0.2, 0.05, 0.01):
            assert abs(small_eigenvalue(params, eps)) < 1e-8

    def test_vanishes_along_grid(self):
        params = ModelParams(2, "+", -1.0, (0.5, -0.3))
        values = [abs(small_eigenvalue(params, e)) for e in (0.25, 0.125, 0.0625, 0.03125)]
        assert values[-1] < 1e-3
        assert values[-1] < values[0]

    def test_window_check(self):
        with pytest.raises(WindowCountError):
            small_eigenvalue(ModelParams(2, "+", -1.0),
                             0.0, SmallEigenConfig(theta=50.0))


class TestSpectralSymmetries:
    def test_even_m_odd_taylor_flip(self):
        # negating the odd-order derivatives is a parity change; spectra agree
        taylor = (0.4, 0.3, -0.2)
        flipped = (-0.4, 0.3, 0.2)
        basis = BasisSpec(128)
        a = np.linalg.eigvalsh(assemble(ModelParams(2, "+", -1.0, taylor), 0.25, basis).entries)
        b = np.linalg.eigvalsh(assemble(ModelParams(2, "+", -1.0, flipped), 0.25, basis).entries)
        assert np.abs(a[:10] - b[:10]).max() < 1e-9

    def test_odd_m_branch_reflection(self):
        # the + branch at eps equals the - branch at -eps after parity
        taylor = (0.3, -0.1)
        basis = BasisSpec(128)
        a = np.linalg.eigvalsh(assemble(ModelParams(3, "+", 1.5, taylor), 0.2, basis).entries)
        b = np.linalg.eigvalsh(assemble(ModelParams(3, "-", 1.5, taylor), -0.2, basis).entries)
        assert np.abs(a[:10] - b[:10]).max() < 1e-9


class TestSweepFit:
    def test_constant_coefficient_fits_zero(self):
        fit = sweep_fit(ModelParams(2, "+", -1.0, ()))
        assert max(abs(c) for c in fit.coefficients) < 1e-8

    def test_recovers_second_order(self):
        cfg = SmallEigenConfig(eps_grid=tuple(2.0 ** (-k) for k in range(3, 13)),
                               fit_order=4)
        fit = sweep_fit(ModelParams(2, "+", -1.0, (1.0, 0.0)), cfg)
        assert abs(fit.coefficients[2] - (-0.25)) < 1e-4
        assert abs(fit.coefficients[1]) < 1e-5

    def test_needs_enough_points(self):
        cfg = SmallEigenConfig(eps_grid=(0.1, 0.05, 0.025), fit_order=3)
        with pytest.raises(ValueError, match="points"):
            sweep_fit(ModelParams(2, "+", -1.0), cfg)
