import sys
from pathlib import Path

import numpy as np
import pytest

SRC = Path(__file__).resolve().parent.parent / "src"
if str(SRC) not in sys.path:
    sys.path.insert(0, str(SRC))


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def gauss_hermite_entry(p: int, j: int, k: int, scale: float,
                        quad_order: int = 80) -> float:
    """Independent quadrature oracle for <b_j, y^p b_k> in the scaled basis.

    Writes the integrand as polynomial * exp(-(y/scale)^2) and integrates
    with Gauss-Hermite nodes, exact for the polynomial degree involved.
    The polynomial part of the basis functions is generated by the
    normalized Hermite recurrence without the Gaussian.
    """
    nodes, weights = np.polynomial.hermite.hermgauss(quad_order)
    top = max(j, k) + 1
    polys = np.zeros((top + 1, nodes.size))
    polys[0] = np.pi ** -0.25
    if top >= 1:
        polys[1] = np.sqrt(2.0) * nodes * polys[0]
    for n in range(1, top):
        polys[n + 1] = (np.sqrt(2.0 / (n + 1)) * nodes * polys[n]
                        - np.sqrt(n / (n + 1.0)) * polys[n - 1])
    integrand = (scale * nodes) ** p * polys[j] * polys[k]
    return float(np.sum(weights * integrand))
