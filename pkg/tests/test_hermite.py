import numpy as np
import pytest

from conftest import gauss_hermite_entry
from smalleig.hermite import (BasisSpec, basis_values, derivative_coefficients,
                              kinetic_matrix, position_matrix)


class TestBasisSpec:
    def test_minimum_size(self):
        with pytest.raises(ValueError):
            BasisSpec(4)

    def test_positive_scale(self):
        with pytest.raises(ValueError):
            BasisSpec(16, -1.0)


class TestPositionMatrix:
    def test_power_zero_is_identity(self):
        m = position_matrix(BasisSpec(12), 0)
        assert np.array_equal(m.entries, np.eye(12))

    def test_single_power_entry(self):
        m = position_matrix(BasisSpec(12), 1)
        assert abs(m.entries[0, 1] - np.sqrt(0.5)) < 1e-15

    def test_square_power_entry(self):
        m = position_matrix(BasisSpec(12), 2)
        assert abs(m.entries[0, 0] - 0.5) < 1e-15

    def test_power_cap(self):
        with pytest.raises(ValueError, match="cap"):
            position_matrix(BasisSpec(12), 30)

    def test_exact_symmetry_and_checkerboard(self):
        for p in (1, 2, 3, 5):
            m = position_matrix(BasisSpec(20, 0.7), p).entries
            assert np.array_equal(m, m.T)
            i, j = np.indices(m.shape)
            assert np.all(m[(i + j + p) % 2 == 1] == 0.0)

    def test_square_of_ladder_matches_second_power_inside(self):
        n = 24
        basis = BasisSpec(n)
        p1 = position_matrix(basis, 1).entries
        p2 = position_matrix(basis, 2).entries
        inner = slice(0, n - 2)
        assert np.abs((p1 @ p1)[inner, inner] - p2[inner, inner]).max() < 1e-12

    @pytest.mark.parametrize("scale", [0.5, 1.0, 2.0])
    def test_quadrature_oracle_agreement(self, scale, rng):
        basis = BasisSpec(16, scale)
        for _ in range(20):
            p = int(rng.integers(0, 7))
            j = int(rng.integers(0, 11))
            k = int(rng.integers(0, 11))
            entry = position_matrix(basis, p).entries[j, k]
            oracle = gauss_hermite_entry(p, j, k, scale)
            assert abs(entry - oracle) < 1e-10


class TestKineticMatrix:
    def test_corner_entry(self):
        m = kinetic_matrix(BasisSpec(12))
        assert abs(m.entries[0, 0] - 0.5) < 1e-15

    def test_scale_doubling_quarters_entries(self):
        m1 = kinetic_matrix(BasisSpec(12, 1.0)).entries
        m2 = kinetic_matrix(BasisSpec(12, 2.0)).entries
        assert np.abs(m1 - 4.0 * m2).max() < 1e-14

    def test_quadrature_oracle_for_gradient_form(self):
        # <b0', b0> under the energy form equals the (0,0) kinetic entry
        basis = BasisSpec(12)
        # -d^2/dy^2 entry (j,k) equals quadrature of b_j' b_k'
        nodes, weights = np.polynomial.hermite.hermgauss(80)
        eps = 1e-5
        vals_p = basis_values(basis, nodes + eps)
        vals_m = basis_values(basis, nodes - eps)
        deriv = (vals_p - vals_m) / (2 * eps)
        gauss = np.exp(nodes ** 2)  # undo the quadrature weight
        entry = np.sum(weights * gauss * deriv[0] * deriv[0])
        assert abs(entry - 0.5) < 1e-7

    def test_harmonic_combination_is_diagonal(self):
        basis = BasisSpec(16)
        h = kinetic_matrix(basis).entries + position_matrix(basis, 2).entries
        off = h - np.diag(np.diagonal(h))
        assert np.abs(off).max() < 1e-14
        assert np.allclose(np.diagonal(h), 2 * np.arange(16) + 1)


class TestBasisValues:
    def test_orthonormality_by_quadrature(self):
        basis = BasisSpec(10, 1.3)
        nodes, weights = np.polynomial.hermite.hermgauss(120)
        pts = 1.3 * nodes
        vals = basis_values(basis, pts)
        gauss = np.exp(nodes ** 2)
        gram = (vals * weights * gauss) @ vals.T * 1.3
        assert np.abs(gram - np.eye(10)).max() < 1e-9

    def test_derivative_coefficients_match_differences(self):
        basis = BasisSpec(10, 0.9)
        coeffs = np.zeros(10)
        coeffs[3] = 1.0
        coeffs[6] = -0.5
        dcoeffs = derivative_coefficients(coeffs, basis)
        pts = np.linspace(-3, 3, 41)
        eps = 1e-6
        up = coeffs @ basis_values(basis, pts + eps)
        dn = coeffs @ basis_values(basis, pts - eps)
        numeric = (up - dn) / (2 * eps)
        synth = dcoeffs @ basis_values(BasisSpec(11, 0.9), pts)
        assert np.abs(numeric - synth).max() < 1e-8
