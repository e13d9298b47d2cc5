import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from deletion_channel.linalg import kron, kron_all, outer, partial_trace
from deletion_channel.states import (
    KET_0,
    KET_1,
    SIGMA_X,
    SQRT1_2,
    BellKind,
    DeletionParams,
    DensityMatrix,
    PureState,
    StateError,
    ancilla_populations,
    bell_state,
    blank_state,
    deletion_machine,
    deletion_output,
    deletion_pure_output,
    maximally_mixed,
    product_state,
    pure_from_bloch,
    reduce_machine_output,
    werner,
)

ANCILLA_A = np.array([1.0, 0.0, 0.0])
ANCILLA_A0 = np.array([0.0, 1.0, 0.0])
ANCILLA_A1 = np.array([0.0, 0.0, 1.0])


class TestDeletionParams:
    def test_derived_amplitudes_are_normalised(self, alpha_grid, m1_grid):
        for alpha in alpha_grid[::7]:
            for m1 in m1_grid:
                p = DeletionParams(alpha=alpha, m1=m1)
                assert abs(p.alpha**2 + p.beta**2 - 1.0) <= 1e-12
                assert abs(p.m1**2 + p.m2**2 - 1.0) <= 1e-12

    def test_default_blank_is_symmetric(self):
        p = DeletionParams(alpha=0.3)
        assert_allclose((p.m1, p.m2), (SQRT1_2, SQRT1_2))

    @pytest.mark.parametrize("alpha", [-0.1, 1.5, float("nan"), float("inf")])
    def test_rejects_invalid_alpha(self, alpha):
        with pytest.raises(StateError):
            DeletionParams(alpha=alpha)

    def test_rejects_invalid_m1(self):
        with pytest.raises(StateError):
            DeletionParams(alpha=0.5, m1=1.2)

    def test_boundary_values_are_product_states(self):
        assert DeletionParams(alpha=0.0).is_product
        assert DeletionParams(alpha=1.0).is_product
        assert not DeletionParams(alpha=0.5).is_product

    def test_swapped(self):
        p = DeletionParams(alpha=0.6, m1=0.3)
        q = p.swapped()
        assert_allclose((q.alpha, q.beta, q.m1), (0.8, 0.6, 0.3))


class TestPureState:
    def test_rejects_unnormalised(self):
        with pytest.raises(StateError):
            PureState([1.0, 1.0])

    def test_rejects_unsupported_dimension(self):
        with pytest.raises(StateError):
            PureState([1.0, 0.0, 0.0])

    def test_amplitudes_are_read_only(self):
        state = PureState([1.0, 0.0])
        with pytest.raises(ValueError):
            state.amplitudes[0] = 0.0

    def test_bloch_vector_needs_a_qubit(self):
        with pytest.raises(StateError):
            bell_state("psi+").bloch_vector()


class TestDensityMatrix:
    def test_rejects_non_hermitian(self):
        m = np.eye(4) / 4.0
        m[0, 1] = 0.1
        with pytest.raises(StateError):
            DensityMatrix(m)

    def test_rejects_wrong_trace(self):
        with pytest.raises(StateError):
            DensityMatrix(np.eye(4) / 2.0)

    def test_rejects_negative_eigenvalues(self):
        with pytest.raises(StateError):
            DensityMatrix(np.diag([1.2, -0.2, 0.0, 0.0]))

    def test_rejects_wrong_shape(self):
        with pytest.raises(StateError):
            DensityMatrix(np.eye(2) / 2.0)

    def test_element_indexing(self):
        rho = deletion_output(DeletionParams(alpha=0.5))
        assert_allclose(rho.element(0, 0, 0, 1), 0.03125)
        assert_allclose(rho.element(0, 1, 1, 0), 0.1875)

    def test_from_pure_needs_two_qubits(self):
        with pytest.raises(StateError):
            DensityMatrix.from_pure(PureState([1.0, 0.0]))


class TestBellStates:
    def test_amplitudes(self):
        assert_allclose(bell_state(BellKind.PSI_PLUS).amplitudes, [0.0, SQRT1_2, SQRT1_2, 0.0])
        assert_allclose(bell_state("psi-").amplitudes, [0.0, SQRT1_2, -SQRT1_2, 0.0])

    @pytest.mark.parametrize("kind", list(BellKind))
    def test_marginals_are_maximally_mixed(self, kind):
        rho = bell_state(kind).projector()
        assert_allclose(partial_trace(rho, (2, 2), keep=(0,)), np.eye(2) / 2.0, atol=1e-15)
        assert_allclose(partial_trace(rho, (2, 2), keep=(1,)), np.eye(2) / 2.0, atol=1e-15)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            bell_state("chi+")


class TestPureFromBloch:
    def test_north_pole_ignores_phase(self):
        assert_allclose(pure_from_bloch(0.0, 1.234).amplitudes, [1.0, 0.0])

    def test_south_pole(self):
        amplitudes = pure_from_bloch(math.pi, 0.0).amplitudes
        assert_allclose(abs(np.vdot(amplitudes, KET_1)), 1.0)

    def test_equator(self):
        state = pure_from_bloch(math.pi / 2.0, 0.0)
        assert_allclose(state.amplitudes, [SQRT1_2, SQRT1_2])
        assert_allclose(state.bloch_vector(), (1.0, 0.0, 0.0), atol=1e-15)


class TestWerner:
    def test_fully_mixed(self):
        assert_allclose(werner(0.0).matrix, np.eye(4) / 4.0)
        assert_allclose(werner(0.0).matrix, maximally_mixed().matrix)

    def test_singlet(self):
        assert_allclose(werner(1.0).matrix, bell_state(BellKind.PSI_MINUS).projector(), atol=1e-15)

    def test_spectrum(self):
        assert_allclose(werner(0.5).eigenvalues, [0.125, 0.125, 0.125, 0.625], atol=1e-12)
        for p in np.linspace(0.0, 1.0, 11):
            expected = sorted([(1.0 - p) / 4.0] * 3 + [(1.0 + 3.0 * p) / 4.0])
            assert_allclose(werner(p).eigenvalues, expected, atol=1e-12)

    @pytest.mark.parametrize("p", [-0.01, 1.2, float("nan")])
    def test_rejects_out_of_range(self, p):
        with pytest.raises(StateError):
            werner(p)


class TestDeletionMachine:
    def test_columns_are_orthonormal(self, m1_grid):
        for m1 in (0.0,) + m1_grid + (1.0,):
            machine = deletion_machine(m1)
            assert machine.shape == (12, 4)
            assert_allclose(machine.conj().T @ machine, np.eye(4), atol=1e-14)

    def test_basis_action(self):
        machine = deletion_machine(SQRT1_2)
        blank = blank_state().amplitudes
        assert_allclose(machine[:, 1], np.ravel(kron_all(KET_0, KET_1, ANCILLA_A)))
        assert_allclose(machine[:, 3], np.ravel(kron_all(KET_1, blank, ANCILLA_A1)))

    def test_linear_extension_gives_the_identical_pair_output(self, alpha_grid):
        for alpha in alpha_grid[::5]:
            p = DeletionParams(alpha=alpha, m1=0.3)
            psi = p.alpha * KET_0 + p.beta * KET_1
            from_machine = deletion_machine(p.m1) @ np.ravel(kron(psi, psi))
            assert_allclose(from_machine, deletion_pure_output(p).amplitudes, atol=1e-12)


class TestDeletionPureOutput:
    def test_alpha_one(self):
        state = deletion_pure_output(DeletionParams(alpha=1.0))
        expected = np.ravel(kron_all(KET_0, blank_state().amplitudes, ANCILLA_A0))
        assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_alpha_zero(self):
        state = deletion_pure_output(DeletionParams(alpha=0.0))
        expected = np.ravel(kron_all(KET_1, blank_state().amplitudes, ANCILLA_A1))
        assert_allclose(state.amplitudes, expected, atol=1e-15)

    def test_ancilla_populations(self):
        state = deletion_pure_output(DeletionParams(alpha=SQRT1_2, m1=SQRT1_2))
        assert state.dim == 12
        assert_allclose(ancilla_populations(state), (0.5, 0.25, 0.25), atol=1e-12)


class TestDeletionOutput:
    def test_entries_at_alpha_half(self):
        rho = deletion_output(DeletionParams(alpha=0.5))
        expected = np.zeros((4, 4))
        entries = {
            (0, 0): 0.03125,
            (0, 1): 0.03125,
            (1, 1): 0.21875,
            (1, 2): 0.1875,
            (2, 2): 0.46875,
            (2, 3): 0.28125,
            (3, 3): 0.28125,
        }
        for (i, j), value in entries.items():
            expected[i, j] = expected[j, i] = value
        assert_allclose(rho.matrix, expected, atol=1e-15)

    def test_alpha_one_is_a_product_state(self):
        rho = deletion_output(DeletionParams(alpha=1.0))
        assert_allclose(rho.matrix, kron(outer(KET_0), blank_state().projector()), atol=1e-15)
        assert_allclose(np.trace(rho.matrix), 1.0)

    def test_matches_traced_machine_output(self, alpha_grid):
        m1_values = [0.1 * k for k in range(11)]
        for alpha in alpha_grid:
            for m1 in m1_values:
                p = DeletionParams(alpha=alpha, m1=m1)
                reduced = reduce_machine_output(deletion_pure_output(p))
                assert np.max(np.abs(reduced.matrix - deletion_output(p).matrix)) <= 1e-12

    def test_trace_and_positivity(self, alpha_grid):
        for alpha in alpha_grid:
            for m1 in [0.1 * k for k in range(11)]:
                rho = deletion_output(DeletionParams(alpha=alpha, m1=m1))
                assert abs(np.trace(rho.matrix) - 1.0) <= 1e-12
                assert rho.eigenvalues[0] >= -1e-10

    def test_bit_flip_exchanges_alpha_and_beta(self, alpha_grid):
        flip = np.kron(SIGMA_X, SIGMA_X)
        for alpha in alpha_grid:
            p = DeletionParams(alpha=alpha)
            flipped = deletion_output(p).conjugated(flip)
            assert np.max(np.abs(flipped.matrix - deletion_output(p.swapped()).matrix)) <= 1e-12

    def test_reduce_rejects_two_qubit_input(self):
        with pytest.raises(StateError):
            reduce_machine_output(bell_state("psi+"))


class TestProductState:
    def test_ground_state(self):
        zero = pure_from_bloch(0.0, 0.0)
        rho = product_state(zero, zero)
        assert_allclose(rho.matrix, np.diag([1.0, 0.0, 0.0, 0.0]))

    def test_needs_single_qubits(self):
        with pytest.raises(StateError):
            product_state(bell_state("psi+"), pure_from_bloch(0.0, 0.0))
