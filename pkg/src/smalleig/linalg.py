"""Real symmetric dense linear algebra: eigendecomposition and the deflated
inverse that inverts an operator on the orthogonal complement of its
(near-)kernel.

Matrices here are small (a few hundred rows, occasionally up to 2048), so
everything is dense and eager.  All values are immutable after construction
and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousKernelError, EighFailure

__all__ = ["OpMatrix", "EigenPair", "eigh", "deflated_solve", "DeflatedSolver"]


@dataclass(frozen=True)
class OpMatrix:
    """Dense real symmetric matrix.

    The array must be exactly symmetric (built that way, never symmetrized
    by averaging) and finite.  ``bandwidth`` is an optional structural hint;
    it is not used for storage.
    """

    entries: np.ndarray
    bandwidth: int | None = None

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"matrix must be square, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix has non-finite entries")
        if not np.array_equal(a, a.T):
            raise ValueError("matrix is not exactly symmetric")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue with its unit-norm eigenvector."""

    value: float
    vector: np.ndarray


def eigh(matrix: OpMatrix) -> list[EigenPair]:
    """Full eigensystem of a symmetric matrix, ascending by eigenvalue.

    Eigenvectors come back orthonormal (LAPACK guarantees well under the
    1e-10 contract used by callers).
    """
    try:
        vals, vecs = np.linalg.eigh(matrix.entries)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise EighFailure(matrix.dim, str(exc)) from exc
    vecs = np.ascontiguousarray(vecs)
    vecs.setflags(write=False)
    return [EigenPair(float(vals[i]), vecs[:, i]) for i in range(matrix.dim)]


class DeflatedSolver:
    """Inverse of a symmetric matrix on the complement of its near-kernel.

    The mode of smallest absolute eigenvalue plays the role of an exact
    kernel: it is annihilated, every other mode is inverted.  Exactly one
    eigenvalue may lie inside ``[-gap_floor, gap_floor]``; anything else
    raises :class:`AmbiguousKernelError`.

    The eigendecomposition is computed once and reused for every solve.
    """

    def __init__(self, matrix: OpMatrix, gap_floor: float,
                 pairs: list[EigenPair] | None = None):
        if gap_floor <= 0:
            raise ValueError("gap_floor must be positive")
        if pairs is None:
            pairs = eigh(matrix)
        vals = np.array([p.value for p in pairs])
        inside = np.flatnonzero(np.abs(vals) <= gap_floor)
        if inside.size != 1:
            raise AmbiguousKernelError(
                f"{inside.size} eigenvalues inside [-{gap_floor:g}, {gap_floor:g}]; "
                "need exactly one (basis too small, or constant off the threshold set)"
            )
        self._k0 = int(inside[0])
        if self._k0 != int(np.argmin(np.abs(vals))):
            raise AmbiguousKernelError(
                "smallest-magnitude eigenvalue lies outside the gap window"
            )
        self._vals = vals
        self._vecs = np.column_stack([p.vector for p in pairs])
        self.kernel_value = float(vals[self._k0])
        self.kernel = self._vecs[:, self._k0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``A x = rhs`` on the kernel complement; result is orthogonal
        to the kernel and the kernel component of ``rhs`` is discarded."""
        coeff = self._vecs.T @ np.asarray(rhs, dtype=float)
        coeff[self._k0] = 0.0
        nz = coeff != 0.0
        coeff[nz] = coeff[nz] / self._vals[nz]
        return self._vecs @ coeff


def deflated_solve(matrix: OpMatrix, kernel: np.ndarray, rhs: np.ndarray,
                   gap_floor: float) -> np.ndarray:
    """One-shot deflated solve.

    ``kernel`` must be the eigenvector of the smallest-magnitude eigenvalue;
    it is checked against the computed decomposition.  For repeated solves
    against one matrix use :class:`DeflatedSolver` directly.
    """
    solver = DeflatedSolver(matrix, gap_floor)
    align = abs(float(np.dot(kernel, solver.kernel)))
    norm = float(np.linalg.norm(kernel))
    if norm == 0.0 or align / norm < 1.0 - 1e-8:
        raise ValueError("supplied kernel does not match the smallest-magnitude eigenvector")
    return solver.solve(rhs)
