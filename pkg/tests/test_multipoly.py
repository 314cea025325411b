from fractions import Fraction

import pytest

from smalleig.multipoly import MultiPoly


def test_zero_coefficients_dropped():
    p = MultiPoly(3, {(1, 0, 0): 1e-15, (0, 1, 0): 2.0})
    assert list(p.terms) == [(0, 1, 0)]


def test_add_and_cancel():
    a = MultiPoly(2, {(1, 0): 1.0, (0, 1): 2.0})
    b = MultiPoly(2, {(1, 0): -1.0})
    assert (a + b).terms == {(0, 1): 2.0}


def test_product_convolves_exponents():
    a1 = MultiPoly(2, {(1, 0): 3.0})
    a2 = MultiPoly(2, {(0, 1): 2.0, (1, 0): 1.0})
    prod = a1 * a2
    assert prod.terms == {(1, 1): 6.0, (2, 0): 3.0}


def test_variable_and_linear_coefficient():
    p = MultiPoly.variable(4, 3, coeff=2.5)
    assert p.linear_coefficient(3) == 2.5
    assert p.linear_coefficient(1) == 0


def test_evaluate_with_padding():
    p = MultiPoly(3, {(2, 0, 1): 2.0, (0, 0, 0): 1.0})
    assert p.evaluate([2.0, 9.0, 3.0]) == pytest.approx(2.0 * 4 * 3 + 1.0)
    assert p.evaluate([2.0]) == pytest.approx(1.0)  # missing variables are zero


def test_weights():
    p = MultiPoly(4, {(2, 1, 0, 0): 1.0, (0, 0, 0, 1): 3.0})
    assert p.weights() == {4}


def test_fraction_coefficients_survive():
    p = MultiPoly(2, {(1, 0): Fraction(1, 3)})
    q = p.scaled(Fraction(3, 2))
    assert q.terms[(1, 0)] == Fraction(1, 2)


def test_mismatched_lengths_rejected():
    with pytest.raises(ValueError):
        MultiPoly(2, {(1, 0, 0): 1.0})


def test_str_rendering():
    p = MultiPoly(2, {(2, 0): -0.25, (0, 1): 0.25})
    assert "a1^2" in str(p) and "a2" in str(p)
