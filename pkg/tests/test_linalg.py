import numpy as np
import pytest

from smalleig.errors import AmbiguousKernelError
from smalleig.linalg import DeflatedSolver, OpMatrix, deflated_solve, eigh


def sym(rng, n):
    a = rng.standard_normal((n, n))
    return OpMatrix(np.triu(a) + np.triu(a, 1).T)


class TestOpMatrix:
    def test_rejects_nonsymmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            OpMatrix(np.array([[1.0, 2.0], [2.0 + 1e-15, 1.0]]))

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError, match="finite"):
            OpMatrix(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_rejects_nonsquare(self):
        with pytest.raises(ValueError, match="square"):
            OpMatrix(np.zeros((2, 3)))

    def test_entries_read_only(self):
        m = OpMatrix(np.eye(2))
        with pytest.raises(ValueError):
            m.entries[0, 0] = 5.0


class TestEigh:
    def test_identity(self):
        pairs = eigh(OpMatrix(np.eye(3)))
        assert [p.value for p in pairs] == [1.0, 1.0, 1.0]

    def test_diagonal_sorted(self):
        pairs = eigh(OpMatrix(np.diag([3.0, 1.0, 2.0])))
        assert [p.value for p in pairs] == [1.0, 2.0, 3.0]

    def test_off_diagonal_pair(self):
        pairs = eigh(OpMatrix(np.array([[0.0, 1.0], [1.0, 0.0]])))
        assert np.allclose([p.value for p in pairs], [-1.0, 1.0])
        v_minus, v_plus = pairs[0].vector, pairs[1].vector
        ref = 1.0 / np.sqrt(2.0)
        assert np.allclose(np.abs(v_minus), [ref, ref])
        assert np.isclose(abs(v_minus @ np.array([1.0, -1.0])) / np.sqrt(2), 1.0)
        assert np.isclose(abs(v_plus @ np.array([1.0, 1.0])) / np.sqrt(2), 1.0)

    def test_orthonormality_and_trace(self, rng):
        m = sym(rng, 40)
        pairs = eigh(m)
        vecs = np.column_stack([p.vector for p in pairs])
        assert np.abs(vecs.T @ vecs - np.eye(40)).max() < 1e-10
        scale = np.abs(m.entries).max()
        assert abs(sum(p.value for p in pairs) - np.trace(m.entries)) < 1e-9 * scale * 40

    def test_residual_contract(self, rng):
        m = sym(rng, 25)
        scale = np.linalg.norm(m.entries, 2)
        for p in eigh(m):
            assert np.linalg.norm(m.entries @ p.vector - p.value * p.vector) <= 1e-10 * scale
            assert abs(np.linalg.norm(p.vector) - 1.0) < 1e-12


class TestDeflatedSolve:
    def test_kernel_rhs_maps_to_zero(self):
        m = OpMatrix(np.diag([0.0, 2.0, 4.0]))
        kernel = np.array([1.0, 0.0, 0.0])
        out = deflated_solve(m, kernel, 3.0 * kernel, gap_floor=1.0)
        assert np.allclose(out, 0.0)

    def test_diagonal_pseudo_inverse(self):
        m = OpMatrix(np.diag([0.0, 2.0, 4.0]))
        out = deflated_solve(m, np.array([1.0, 0.0, 0.0]),
                             np.array([0.0, 1.0, 1.0]), gap_floor=1.0)
        assert np.allclose(out, [0.0, 0.5, 0.25])

    def test_kernel_component_annihilated(self):
        m = OpMatrix(np.array([[0.0, 0.0], [0.0, 3.0]]))
        out = deflated_solve(m, np.array([1.0, 0.0]),
                             np.array([5.0, 6.0]), gap_floor=1.0)
        assert np.allclose(out, [0.0, 2.0])

    def test_result_perpendicular_to_kernel(self, rng):
        diag = np.array([1e-12, 1.0, 2.0, 5.0, 9.0])
        m = OpMatrix(np.diag(diag))
        solver = DeflatedSolver(m, gap_floor=0.5)
        rhs = rng.standard_normal(5)
        out = solver.solve(rhs)
        assert abs(out @ solver.kernel) < 1e-10 * np.linalg.norm(out)

    def test_linearity(self, rng):
        m = sym(rng, 12)
        shift = eigh(m)[0].value  # push one eigenvalue to zero-ish
        m2 = OpMatrix(m.entries - shift * np.eye(12))
        solver = DeflatedSolver(m2, gap_floor=1e-6)
        u, v = rng.standard_normal(12), rng.standard_normal(12)
        lhs = solver.solve(2.0 * u - 3.0 * v)
        rhs = 2.0 * solver.solve(u) - 3.0 * solver.solve(v)
        assert np.abs(lhs - rhs).max() < 1e-9 * max(1.0, np.abs(lhs).max())

    def test_reconstruction_with_exact_zero_mode(self, rng):
        diag = np.array([0.0, 1.5, 3.0, 4.5])
        m = OpMatrix(np.diag(diag))
        solver = DeflatedSolver(m, gap_floor=0.5)
        for _ in range(5):
            rhs = rng.standard_normal(4)
            recon = m.entries @ solver.solve(rhs) + (solver.kernel @ rhs) * solver.kernel
            assert np.abs(recon - rhs).max() < 1e-12

    def test_ambiguous_kernel_rejected(self):
        m = OpMatrix(np.diag([1e-8, -1e-8, 2.0]))
        with pytest.raises(AmbiguousKernelError):
            DeflatedSolver(m, gap_floor=1e-4)

    def test_kernel_mismatch_rejected(self):
        m = OpMatrix(np.diag([0.0, 2.0, 4.0]))
        with pytest.raises(ValueError, match="kernel"):
            deflated_solve(m, np.array([0.0, 1.0, 0.0]),
                           np.array([1.0, 1.0, 1.0]), gap_floor=1.0)
