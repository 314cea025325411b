"""Scaled Hermite-function Galerkin basis.

Basis functions are ``b_k(y) = h_k(y / sigma) / sqrt(sigma)`` where ``h_k``
are the orthonormal Hermite functions, so the basis is orthonormal for every
scale and no overlap matrix appears anywhere.  Multiplication by powers of
``y`` and the second-derivative operator are assembled from the ladder
relation

    y b_k = sigma * (sqrt((k+1)/2) b_{k+1} + sqrt(k/2) b_{k-1})

which makes every operator with polynomial coefficients exactly banded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import OpMatrix

__all__ = ["BasisSpec", "position_matrix", "kinetic_matrix", "kinetic_diags",
           "power_diags", "densify_diags", "basis_values",
           "derivative_coefficients", "P_MAX_DEFAULT"]

P_MAX_DEFAULT = 24


@dataclass(frozen=True)
class BasisSpec:
    """Number of basis functions and the length scale of the basis."""

    dim: int
    scale: float = 1.0

    def __post_init__(self):
        if self.dim < 8:
            raise ValueError("basis needs at least 8 functions")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise ValueError("scale must be positive and finite")

    def doubled(self) -> "BasisSpec":
        return BasisSpec(2 * self.dim, self.scale)


# Banded matrices are held as {offset: diagonal}, where diagonal[i] is the
# entry (i, i + offset) padded with zeros to full length; products then cost
# O(dim * bandwidth^2) instead of a dense matmul.


def _ladder_diags(dim: int, scale: float) -> dict[int, np.ndarray]:
    off = np.zeros(dim)
    k = np.arange(dim - 1, dtype=float)
    off[: dim - 1] = scale * np.sqrt((k + 1.0) / 2.0)
    return {1: off, -1: np.concatenate(([0.0], off[:-1]))}


def _band_mul(ad: dict[int, np.ndarray], bd: dict[int, np.ndarray],
              n: int) -> dict[int, np.ndarray]:
    cd: dict[int, np.ndarray] = {}
    for d1, a in ad.items():
        for d2, b in bd.items():
            d = d1 + d2
            i0 = max(0, -d1, -d)
            i1 = min(n, n - d1, n - d)
            if i0 >= i1:
                continue
            tgt = cd.setdefault(d, np.zeros(n))
            tgt[i0:i1] += a[i0:i1] * b[i0 + d1:i1 + d1]
    return cd


def _densify(diags: dict[int, np.ndarray], n: int) -> np.ndarray:
    # built from the upper diagonals and mirrored, so the stored matrix is
    # exactly symmetric without averaging
    out = np.zeros((n, n))
    for d, vals in diags.items():
        if d < 0:
            continue
        idx = np.arange(0, n - d)
        out[idx, idx + d] = vals[: n - d]
    return np.triu(out) + np.triu(out, 1).T


def _power_diags(basis: BasisSpec, p_top: int) -> list[dict[int, np.ndarray]]:
    """Diagonals of y**p for p = 0..p_top, computed at padded dimension
    ``dim + p_top`` so the retained block is free of truncation bias, then
    cut back to ``dim``."""
    n, pad = basis.dim, basis.dim + p_top
    y = _ladder_diags(pad, basis.scale)
    seq = [{0: np.ones(pad)}]
    for _ in range(p_top):
        seq.append(_band_mul(seq[-1], y, pad))
    return [{d: v[:n] for d, v in diags.items() if d > -n and d < n} for diags in seq]


def position_matrix(basis: BasisSpec, p: int, p_max: int = P_MAX_DEFAULT) -> OpMatrix:
    """Matrix of multiplication by ``y**p``.

    Computed as the p-th power of the single-y ladder matrix built at padded
    dimension ``dim + p`` and truncated back, which keeps the top rows exact:
    a length-p ladder path starting below ``dim`` never leaves the padded
    index range.  Entries with ``(i + j + p)`` odd are exactly zero, and the
    bandwidth is p.
    """
    if p < 0:
        raise ValueError("power must be nonnegative")
    if p > p_max:
        raise ValueError(f"power {p} exceeds cap {p_max}")
    n = basis.dim
    if p == 0:
        return OpMatrix(np.eye(n), bandwidth=0)
    diags = _power_diags(basis, p)[p]
    return OpMatrix(_densify(diags, n), bandwidth=p)


def position_matrix_sequence(basis: BasisSpec, p_top: int) -> list[np.ndarray]:
    """Arrays of ``y**p`` for p = 0..p_top, sharing one padded ladder."""
    n = basis.dim
    return [_densify(d, n) for d in _power_diags(basis, p_top)]


# public aliases for diagonal-space assembly in other modules
power_diags = _power_diags
densify_diags = _densify


def kinetic_diags(basis: BasisSpec) -> dict[int, np.ndarray]:
    n, s2 = basis.dim, basis.scale ** 2
    k = np.arange(n, dtype=float)
    diag = (2.0 * k + 1.0) / (2.0 * s2)
    off = np.zeros(n)
    kk = np.arange(n - 2, dtype=float)
    off[: n - 2] = -np.sqrt((kk + 1.0) * (kk + 2.0)) / (2.0 * s2)
    return {0: diag, 2: off, -2: np.concatenate(([0.0, 0.0], off[:-2]))}


def kinetic_matrix(basis: BasisSpec) -> OpMatrix:
    """Matrix of ``-d^2/dy^2``: diagonal ``(2k+1)/(2 sigma^2)``, second
    off-diagonal ``-sqrt((k+1)(k+2))/(2 sigma^2)``."""
    return OpMatrix(_densify(kinetic_diags(basis), basis.dim), bandwidth=2)


def basis_values(basis: BasisSpec, points: np.ndarray) -> np.ndarray:
    """Evaluate all basis functions at the given points.

    Returns an array of shape ``(dim, len(points))``.  Uses the stable
    three-term recurrence for Hermite functions; the Gaussian factor is kept
    inside so large arguments underflow to zero gracefully.
    """
    pts = np.asarray(points, dtype=float)
    u = pts / basis.scale
    vals = np.zeros((basis.dim, pts.size))
    h_prev = np.pi ** (-0.25) * np.exp(-0.5 * u * u)
    vals[0] = h_prev
    if basis.dim > 1:
        h_cur = np.sqrt(2.0) * u * h_prev
        vals[1] = h_cur
        for k in range(1, basis.dim - 1):
            h_next = np.sqrt(2.0 / (k + 1.0)) * u * h_cur - np.sqrt(k / (k + 1.0)) * h_prev
            vals[k + 1] = h_next
            h_prev, h_cur = h_cur, h_next
    return vals / np.sqrt(basis.scale)


def derivative_coefficients(coeffs: np.ndarray, basis: BasisSpec) -> np.ndarray:
    """Coefficients of f' given the coefficients of f; one index longer.

    Uses h_k' = sqrt(k/2) h_{k-1} - sqrt((k+1)/2) h_{k+1}, divided by the
    basis scale.
    """
    c = np.asarray(coeffs, dtype=float)
    n = c.size
    out = np.zeros(n + 1)
    k = np.arange(n, dtype=float)
    out[:-2] += c[1:] * np.sqrt((k[1:]) / 2.0)
    out[1:] -= c * np.sqrt((k + 1.0) / 2.0)
    return out / basis.scale
