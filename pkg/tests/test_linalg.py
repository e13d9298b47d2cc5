import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from deletion_channel.linalg import (
    ConvergenceError,
    LinalgError,
    _jacobi_symmetric,
    adjoint,
    as_matrix,
    hermitian_eigenvalues,
    kron,
    kron_all,
    matmul,
    outer,
    partial_trace,
    partial_transpose_b,
    svd3,
    symmetric_eigh,
    trace,
)
from deletion_channel.states import KET_0, SIGMA_X, SIGMA_Z, BellKind, bell_state, blank_state


def _random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return 0.5 * (g + g.conj().T)


class TestMatrixConstruction:
    def test_rejects_non_finite(self):
        with pytest.raises(LinalgError):
            as_matrix([[1.0, np.nan], [0.0, 1.0]])

    def test_rejects_wrong_shape(self):
        with pytest.raises(LinalgError):
            as_matrix(np.eye(3), shape=(4, 4))
        with pytest.raises(LinalgError):
            as_matrix([1.0, 2.0])

    def test_results_are_read_only(self):
        m = kron(np.eye(2), np.eye(2))
        with pytest.raises(ValueError):
            m[0, 0] = 2.0

    def test_plumbing(self, rng):
        a = _random_hermitian(rng, 4) + 1j * np.eye(4)
        assert_allclose(adjoint(a), a.conj().T)
        assert_allclose(matmul(a, np.eye(4), a), a @ a)
        assert trace(np.eye(4)) == 4.0
        ket = np.array([1.0, 1j]) / np.sqrt(2.0)
        assert_allclose(outer(ket) @ ket, ket)


class TestKron:
    def test_identity(self):
        assert_array_equal(kron(np.eye(2), np.eye(2)), np.eye(4))

    def test_block_structure(self):
        zero = np.zeros((2, 2))
        expected = np.block([[SIGMA_X, zero], [zero, -SIGMA_X]])
        assert_allclose(kron(SIGMA_Z, SIGMA_X), expected)

    def test_blank_projector_fills_top_left_block(self):
        m = kron(outer(KET_0), blank_state().projector())
        expected = np.zeros((4, 4))
        expected[:2, :2] = 0.5
        assert_allclose(m, expected, atol=1e-15)

    def test_trace_factorises_and_is_associative(self, rng):
        a, b, c = (_random_hermitian(rng, 2) for _ in range(3))
        assert_allclose(trace(kron(a, b)), trace(a) * trace(b))
        assert_allclose(kron(kron(a, b), c), kron(a, kron(b, c)), atol=1e-14)
        assert_allclose(kron_all(a, b, c), kron(a, kron(b, c)), atol=1e-14)


class TestPartialTranspose:
    def test_maximally_mixed_is_invariant(self):
        assert_array_equal(partial_transpose_b(np.eye(4) / 4.0), np.eye(4) / 4.0)

    def test_psi_plus_has_one_negative_eigenvalue(self):
        rho = bell_state(BellKind.PSI_PLUS).projector()
        assert_allclose(hermitian_eigenvalues(partial_transpose_b(rho)), [-0.5, 0.5, 0.5, 0.5], atol=1e-12)

    def test_involution(self, make_density):
        for _ in range(10):
            rho = make_density().matrix
            assert_array_equal(partial_transpose_b(partial_transpose_b(rho)), rho)

    def test_preserves_trace_and_hermiticity(self, make_density):
        rho = make_density().matrix
        pt = partial_transpose_b(rho)
        assert_allclose(trace(pt), 1.0, atol=1e-14)
        assert_allclose(pt, pt.conj().T, atol=1e-15)

    def test_index_map(self):
        rho = np.arange(16, dtype=float).reshape(4, 4)
        pt = partial_transpose_b(rho)
        # rho^{T_B}_{m mu, n nu} = rho_{m nu, n mu}
        for m in range(2):
            for mu in range(2):
                for n in range(2):
                    for nu in range(2):
                        assert pt[2 * m + mu, 2 * n + nu] == rho[2 * m + nu, 2 * n + mu]

    def test_rejects_wrong_dimension(self):
        with pytest.raises(LinalgError):
            partial_transpose_b(np.eye(3))


class TestPartialTrace:
    def test_bell_marginals(self):
        rho = bell_state(BellKind.PSI_PLUS).projector()
        assert_allclose(partial_trace(rho, (2, 2), keep=(0,)), np.eye(2) / 2.0, atol=1e-15)
        assert_allclose(partial_trace(rho, (2, 2), keep=(1,)), np.eye(2) / 2.0, atol=1e-15)

    def test_product_state(self):
        rho_a = outer(np.array([0.6, 0.8j]))
        rho_b = np.diag([0.3, 0.7])
        assert_allclose(partial_trace(kron(rho_a, rho_b), (2, 2), keep=(0,)), rho_a, atol=1e-15)
        assert_allclose(partial_trace(kron(rho_a, rho_b), (2, 2), keep=(1,)), rho_b, atol=1e-15)

    def test_ket_and_projector_agree(self, rng):
        ket = rng.normal(size=12) + 1j * rng.normal(size=12)
        ket /= np.linalg.norm(ket)
        from_ket = partial_trace(ket, (2, 2, 3), keep=(0, 1))
        from_projector = partial_trace(outer(ket), (2, 2, 3), keep=(0, 1))
        assert_allclose(from_ket, from_projector, atol=1e-15)
        assert_allclose(trace(from_ket), 1.0, atol=1e-14)

    def test_keeps_subsystem_order(self):
        rho_a, rho_b, rho_c = np.diag([1.0, 0.0]), np.diag([0.25, 0.75]), np.eye(3) / 3.0
        reduced = partial_trace(kron_all(rho_a, rho_b, rho_c), (2, 2, 3), keep=(0, 2))
        assert_allclose(reduced, kron(rho_a, rho_c), atol=1e-15)

    def test_rejects_inconsistent_dimensions(self):
        with pytest.raises(LinalgError):
            partial_trace(np.eye(4), (2, 3), keep=(0,))
        with pytest.raises(LinalgError):
            partial_trace(np.eye(4), (2, 2), keep=(2,))
        with pytest.raises(LinalgError):
            partial_trace(np.ones(5), (2, 2), keep=(0,))


class TestHermitianEigenvalues:
    def test_identity(self):
        assert_allclose(hermitian_eigenvalues(np.eye(4)), [1.0, 1.0, 1.0, 1.0])

    def test_rank_one_projector(self):
        rho = bell_state(BellKind.PSI_PLUS).projector()
        assert_allclose(hermitian_eigenvalues(rho), [0.0, 0.0, 0.0, 1.0], atol=1e-14)

    def test_matches_numpy_on_random_complex_matrices(self, rng):
        for n in (2, 3, 4, 6):
            m = _random_hermitian(rng, n)
            values = hermitian_eigenvalues(m)
            assert_allclose(values, np.linalg.eigvalsh(m), atol=1e-10)
            assert np.all(np.diff(values) >= 0.0)
            assert_allclose(np.sum(values), np.trace(m).real, atol=1e-10)

    def test_real_path_up_to_twelve_dimensions(self, rng):
        g = rng.normal(size=(12, 12))
        m = g + g.T
        assert_allclose(hermitian_eigenvalues(m), np.linalg.eigvalsh(m), atol=1e-10)

    def test_rejects_non_hermitian(self):
        with pytest.raises(LinalgError):
            hermitian_eigenvalues([[1.0, 1.0], [0.0, 1.0]])

    def test_rejects_large_matrices(self):
        with pytest.raises(LinalgError):
            hermitian_eigenvalues(np.eye(13))

    def test_non_convergence(self):
        with pytest.raises(ConvergenceError):
            _jacobi_symmetric(np.array([[1.0, 0.5], [0.5, 2.0]]), max_sweeps=0)


class TestSymmetricEigh:
    def test_reconstruction(self, rng):
        g = rng.normal(size=(4, 4))
        m = g + g.T
        values, vectors = symmetric_eigh(m)
        assert_allclose(vectors @ np.diag(values) @ vectors.T, m, atol=1e-9)
        assert_allclose(vectors.T @ vectors, np.eye(4), atol=1e-12)
        assert np.all(np.diff(values) >= 0.0)

    def test_rejects_asymmetric(self):
        with pytest.raises(LinalgError):
            symmetric_eigh([[1.0, 2.0], [0.0, 1.0]])


def _reconstruct(result):
    s1, s2, s3 = result.singular_values
    return result.u @ np.diag([s1, s2, result.det_sign * s3]) @ result.v.T


class TestSvd3:
    def test_identity(self):
        result = svd3(np.eye(3))
        assert_allclose(result.u, np.eye(3))
        assert_allclose(result.v, np.eye(3))
        assert result.singular_values == (1.0, 1.0, 1.0)
        assert result.det_sign == 1

    def test_reflection_is_carried_by_the_sign(self):
        m = np.diag([0.5, 0.5, -0.5])
        result = svd3(m)
        assert_allclose(result.singular_values, (0.5, 0.5, 0.5))
        assert result.det_sign == -1
        assert_allclose(_reconstruct(result), m, atol=1e-12)

    def test_deletion_correlation_matrix(self):
        m = np.array([[0.375, 0.0, 0.0], [0.0, 0.375, 0.0], [-0.5, 0.0, -0.375]])
        result = svd3(m)
        assert_allclose(_reconstruct(result), m, atol=1e-10)
        assert_allclose(np.linalg.det(result.u), 1.0, atol=1e-12)
        assert_allclose(np.linalg.det(result.v), 1.0, atol=1e-12)
        assert result.det_sign == -1

    def test_random_matrices(self, rng):
        for _ in range(25):
            m = rng.normal(size=(3, 3))
            result = svd3(m)
            s = result.singular_values
            assert s[0] >= s[1] >= s[2] >= 0.0
            assert_allclose(s, np.linalg.svd(m, compute_uv=False), atol=1e-10)
            assert_allclose(np.sqrt(np.sort(np.linalg.eigvalsh(m.T @ m))[::-1]), s, atol=1e-10)
            assert_allclose(_reconstruct(result), m, atol=1e-10)
            assert_allclose(np.linalg.det(result.u), 1.0, atol=1e-12)
            assert_allclose(np.linalg.det(result.v), 1.0, atol=1e-12)
            assert result.det_sign == (-1 if np.linalg.det(m) < 0 else 1)

    @pytest.mark.parametrize(
        "m",
        [np.zeros((3, 3)), np.diag([0.0, 0.0, 1.0]), np.outer([0.6, 0.0, 0.8], [0.0, 1.0, 0.0])],
    )
    def test_rank_deficient(self, m):
        result = svd3(m)
        assert_allclose(_reconstruct(result), m, atol=1e-12)
        assert_allclose(result.u.T @ result.u, np.eye(3), atol=1e-12)
        assert_allclose(np.linalg.det(result.u), 1.0, atol=1e-12)
        assert_allclose(np.linalg.det(result.v), 1.0, atol=1e-12)
