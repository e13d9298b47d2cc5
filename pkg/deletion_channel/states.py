"""Quantum states used throughout the package.

Basis ordering is |00>, |01>, |10>, |11> with qubit ``a`` as the first
factor. The deletion machine's ancilla is an explicit 3-level system with
orthonormal basis (A, A0, A1), appended as the last factor, so the full
machine output lives in 2 x 2 x 3 = 12 dimensions.
"""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Tuple

import numpy as np
import numpy.typing as npt

from .linalg import (
    ComplexMatrix,
    LinalgError,
    add,
    as_matrix,
    hermitian_eigenvalues,
    hermiticity_error,
    kron,
    kron_all,
    outer,
    partial_trace,
    scale,
)

logger = logging.getLogger(__name__)

SQRT1_2 = 1.0 / math.sqrt(2.0)
NORM_TOL = 1e-12
TRACE_TOL = 1e-12
HERMITIAN_TOL = 1e-12
PSD_FLOOR = -1e-10

QUBIT_DIMS = (2, 2)
MACHINE_DIMS = (2, 2, 3)
ANCILLA_LABELS = ("A", "A0", "A1")
PURE_DIMS = (2, 4, 12)

IDENTITY = as_matrix(np.eye(2))
SIGMA_X = as_matrix([[0, 1], [1, 0]])
SIGMA_Y = as_matrix([[0, -1j], [1j, 0]])
SIGMA_Z = as_matrix([[1, 0], [0, -1]])
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

KET_0 = np.array([1.0, 0.0], dtype=np.complex128)
KET_1 = np.array([0.0, 1.0], dtype=np.complex128)


class StateError(ValueError):
    pass


class BellKind(str, Enum):
    PSI_PLUS = "psi+"
    PSI_MINUS = "psi-"
    PHI_PLUS = "phi+"
    PHI_MINUS = "phi-"


def _unit_amplitude(name: str, value: float) -> float:
    value = float(value)
    if not math.isfinite(value) or not 0.0 <= value <= 1.0:
        raise StateError(f"{name} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class DeletionParams:
    """Real input amplitude ``alpha`` and blank-state amplitude ``m1``.

    ``beta`` and ``m2`` are derived so both pairs are normalised.
    """

    alpha: float
    m1: float = SQRT1_2
    beta: float = field(init=False)
    m2: float = field(init=False)

    def __post_init__(self) -> None:
        alpha = _unit_amplitude("alpha", self.alpha)
        m1 = _unit_amplitude("m1", self.m1)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "m1", m1)
        object.__setattr__(self, "beta", math.sqrt(max(0.0, 1.0 - alpha * alpha)))
        object.__setattr__(self, "m2", math.sqrt(max(0.0, 1.0 - m1 * m1)))

    @property
    def is_product(self) -> bool:
        return self.alpha in (0.0, 1.0)

    def blank(self) -> "PureState":
        return blank_state(self.m1)

    def swapped(self) -> "DeletionParams":
        return DeletionParams(alpha=self.beta, m1=self.m1)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: npt.NDArray[np.complex128]

    def __post_init__(self) -> None:
        amplitudes = np.array(self.amplitudes, dtype=np.complex128).ravel()
        if amplitudes.shape[0] not in PURE_DIMS:
            raise StateError(f"Pure state dimension must be one of {PURE_DIMS}, got {amplitudes.shape[0]}")
        if not np.all(np.isfinite(amplitudes)):
            raise StateError("Pure state has non-finite amplitudes")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise StateError(f"Pure state is not normalised (squared norm {norm!r})")
        amplitudes.flags.writeable = False
        object.__setattr__(self, "amplitudes", amplitudes)

    @property
    def dim(self) -> int:
        return int(self.amplitudes.shape[0])

    def projector(self) -> ComplexMatrix:
        return outer(self.amplitudes)

    def bloch_vector(self) -> Tuple[float, float, float]:
        if self.dim != 2:
            raise StateError("Bloch vector is defined for single qubits only")
        rho = self.projector()
        return tuple(float(np.trace(rho @ sigma).real) for sigma in PAULIS)  # type: ignore[return-value]


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Two-qubit state: Hermitian, unit trace, positive semidefinite."""

    matrix: ComplexMatrix
    eigenvalues: Tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        try:
            matrix = as_matrix(self.matrix, shape=(4, 4))
        except LinalgError as exc:
            raise StateError(str(exc)) from exc
        deviation = hermiticity_error(matrix)
        if deviation > HERMITIAN_TOL:
            raise StateError(f"Density matrix is not Hermitian (deviation {deviation:.3e})")
        trace = complex(np.trace(matrix))
        if abs(trace - 1.0) > TRACE_TOL:
            raise StateError(f"Density matrix trace is {trace.real!r}, expected 1")
        spectrum = hermitian_eigenvalues(matrix)
        if spectrum[0] < PSD_FLOOR:
            raise StateError(f"Density matrix is not positive (min eigenvalue {spectrum[0]:.3e})")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "eigenvalues", tuple(float(x) for x in spectrum))

    @classmethod
    def from_pure(cls, state: PureState) -> "DensityMatrix":
        if state.dim != 4:
            raise StateError(f"Two-qubit density matrix needs a 4-dim state, got {state.dim}")
        return cls(state.projector())

    def element(self, m: int, mu: int, n: int, nu: int) -> complex:
        """rho_{m mu, n nu}: row |m mu>, column |n nu>."""
        return complex(self.matrix[2 * m + mu, 2 * n + nu])

    def conjugated(self, unitary: npt.ArrayLike) -> "DensityMatrix":
        u = np.asarray(unitary, dtype=np.complex128)
        return DensityMatrix(u @ self.matrix @ u.conj().T)


def blank_state(m1: float = SQRT1_2) -> PureState:
    m1 = _unit_amplitude("m1", m1)
    return PureState([m1, math.sqrt(max(0.0, 1.0 - m1 * m1))])


def bell_state(kind: BellKind | str) -> PureState:
    kind = BellKind(kind)
    amplitudes = {
        BellKind.PSI_PLUS: (0.0, SQRT1_2, SQRT1_2, 0.0),
        BellKind.PSI_MINUS: (0.0, SQRT1_2, -SQRT1_2, 0.0),
        BellKind.PHI_PLUS: (SQRT1_2, 0.0, 0.0, SQRT1_2),
        BellKind.PHI_MINUS: (SQRT1_2, 0.0, 0.0, -SQRT1_2),
    }[kind]
    return PureState(amplitudes)


def pure_from_bloch(theta: float, phi: float) -> PureState:
    """cos(theta/2)|0> + e^{i phi} sin(theta/2)|1>."""
    return PureState([math.cos(theta / 2.0), cmath.exp(1j * phi) * math.sin(theta / 2.0)])


def product_state(a: PureState, b: PureState) -> DensityMatrix:
    if a.dim != 2 or b.dim != 2:
        raise StateError("Product state needs two single-qubit states")
    return DensityMatrix(kron(a.projector(), b.projector()))


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4) / 4.0)


def werner(p: float) -> DensityMatrix:
    """p |psi-><psi-| + (1 - p) I/4."""
    p = float(p)
    if not math.isfinite(p) or not 0.0 <= p <= 1.0:
        raise StateError(f"Werner mixing parameter must lie in [0, 1], got {p}")
    singlet = bell_state(BellKind.PSI_MINUS).projector()
    return DensityMatrix(add(scale(singlet, p), scale(np.eye(4), (1.0 - p) / 4.0)))


def _ancilla(label: str) -> np.ndarray:
    ket = np.zeros(3, dtype=np.complex128)
    ket[ANCILLA_LABELS.index(label)] = 1.0
    return ket


def deletion_machine(m1: float = SQRT1_2) -> ComplexMatrix:
    """12x4 isometry: images of |00>, |01>, |10>, |11> (ancilla starting in A).

    |00>|A> -> |0>|S>|A0>,  |01>|A> -> |01>|A>,
    |10>|A> -> |10>|A>,     |11>|A> -> |1>|S>|A1>
    with S the blank state m1|0> + m2|1>.
    """
    blank = blank_state(m1).amplitudes
    columns = [
        kron_all(KET_0, blank, _ancilla("A0")),
        kron_all(KET_0, KET_1, _ancilla("A")),
        kron_all(KET_1, KET_0, _ancilla("A")),
        kron_all(KET_1, blank, _ancilla("A1")),
    ]
    return as_matrix(np.column_stack([np.ravel(c) for c in columns]))


def deletion_pure_output(p: DeletionParams) -> PureState:
    """alpha^2|0>|S>|A0> + beta^2|1>|S>|A1> + alpha beta (|01> + |10>)|A>."""
    blank = p.blank().amplitudes
    amplitudes = (
        p.alpha**2 * np.ravel(kron_all(KET_0, blank, _ancilla("A0")))
        + p.beta**2 * np.ravel(kron_all(KET_1, blank, _ancilla("A1")))
        + p.alpha
        * p.beta
        * (np.ravel(kron_all(KET_0, KET_1, _ancilla("A"))) + np.ravel(kron_all(KET_1, KET_0, _ancilla("A"))))
    )
    return PureState(amplitudes)


def deletion_output(p: DeletionParams) -> DensityMatrix:
    """Two-qubit state left after the deletion machine, built term by term.

    alpha^4 |0><0| x P_S + beta^4 |1><1| x P_S + 2 alpha^2 beta^2 |psi+><psi+|
    """
    if p.is_product:
        logger.debug("alpha=%s gives a product state", p.alpha)
    blank_projector = p.blank().projector()
    rho = add(
        scale(kron(outer(KET_0), blank_projector), p.alpha**4),
        scale(kron(outer(KET_1), blank_projector), p.beta**4),
        scale(bell_state(BellKind.PSI_PLUS).projector(), 2.0 * p.alpha**2 * p.beta**2),
    )
    return DensityMatrix(rho)


def reduce_machine_output(state: PureState) -> DensityMatrix:
    if state.dim != 12:
        raise StateError(f"Machine output must be 12-dimensional, got {state.dim}")
    return DensityMatrix(partial_trace(state.amplitudes, MACHINE_DIMS, keep=(0, 1)))


def ancilla_populations(state: PureState) -> Tuple[float, float, float]:
    if state.dim != 12:
        raise StateError(f"Machine output must be 12-dimensional, got {state.dim}")
    marginal = partial_trace(state.amplitudes, MACHINE_DIMS, keep=(2,))
    return tuple(float(x) for x in np.diag(marginal).real)  # type: ignore[return-value]
