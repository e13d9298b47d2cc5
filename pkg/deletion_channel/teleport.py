"""Standard one-qubit teleportation through a shared two-qubit state.

Protocol conventions (all fixed here):

* The input qubit is subsystem 0, Alice's half of the shared pair is 1 and
  Bob's half is 2.
* Alice measures (0, 1) in the Bell basis; Bob's correction for each outcome
  is listed in ``BELL_CORRECTIONS``. The table is the one that teleports
  perfectly through |psi->.
* The induced map is stored as its Choi matrix
  J = (1/2) sum_ij |i><j| x Lambda(|i><j|), so the identity channel has
  J = |phi+><phi+|.

Monte Carlo sampling uses numpy's PCG64 generator. Chunk ``k`` of a run
with seed ``s`` and stream ``r`` draws from ``SeedSequence(s, spawn_key=(r, k))``,
so results depend only on (seed, stream, samples, chunk_size), never on the
number of workers.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, NamedTuple, Tuple

import numpy as np
import numpy.typing as npt

from .criteria import CLASSICAL_FIDELITY, correlation_matrix, fidelity_bound, fidelity_from_singular_sum
from .linalg import (
    ComplexMatrix,
    SVD_RANK_TOL,
    RealMatrix3,
    as_matrix,
    as_real3,
    hermitian_eigenvalues,
    hermiticity_error,
    kron,
    outer,
    partial_trace,
    svd3,
)
from .states import IDENTITY, PAULIS, SIGMA_X, SIGMA_Z, BellKind, DensityMatrix, bell_state

logger = logging.getLogger(__name__)

UNITARY_TOL = 1e-12
CHOI_TOL = 1e-10
MIN_SAMPLES = 100
DEFAULT_SAMPLES = 100_000
DEFAULT_CHUNK_SIZE = 16_384
# floor for the 3-sigma comparison when every sample is identical
FIDELITY_ABS_TOL = 1e-9

BELL_CORRECTIONS = (
    (BellKind.PSI_MINUS, IDENTITY),
    (BellKind.PSI_PLUS, SIGMA_Z),
    (BellKind.PHI_MINUS, SIGMA_X),
    (BellKind.PHI_PLUS, as_matrix(SIGMA_Z @ SIGMA_X)),
)

# rotation by pi about z: turns diag(s1, s2, -s3) into diag(-s1, -s2, -s3)
_FLIP_XY = np.diag([-1.0, -1.0, 1.0])


class TeleportError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TeleportChannel:
    choi: ComplexMatrix
    source: str = ""

    def __post_init__(self) -> None:
        choi = as_matrix(self.choi, shape=(4, 4))
        if hermiticity_error(choi) > CHOI_TOL:
            raise TeleportError("Choi matrix is not Hermitian")
        if abs(complex(np.trace(choi)) - 1.0) > CHOI_TOL:
            raise TeleportError("Choi matrix does not have unit trace")
        if hermitian_eigenvalues(0.5 * (choi + choi.conj().T))[0] < -CHOI_TOL:
            raise TeleportError("Choi matrix is not positive")
        marginal = partial_trace(choi, (2, 2), keep=(0,))
        if np.max(np.abs(marginal - np.eye(2) / 2.0)) > CHOI_TOL:
            raise TeleportError("Channel is not trace preserving")
        object.__setattr__(self, "choi", choi)

    def apply(self, rho: npt.ArrayLike) -> ComplexMatrix:
        """Lambda(rho) = 2 Tr_in[(rho^T x I) J]."""
        rho = np.asarray(rho, dtype=np.complex128)
        return as_matrix(2.0 * partial_trace(np.kron(rho.T, np.eye(2)) @ self.choi, (2, 2), keep=(1,)))


@dataclass(frozen=True)
class FidelityEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    stream: int = 0


class OptimalRotations(NamedTuple):
    rot_a: ComplexMatrix
    rot_b: ComplexMatrix
    predicted_fidelity: float
    so3_a: RealMatrix3
    so3_b: RealMatrix3
    det_sign: int
    attains_bound: bool


@dataclass(frozen=True)
class FidelityVerification:
    formula: float
    predicted: float
    exact: float
    simulated: FidelityEstimate
    det_c: float
    attains_bound: bool
    consistent: bool

    @property
    def branch(self) -> str:
        return "det(C) <= 0" if self.attains_bound else "det(C) > 0"


def _check_unitary(name: str, u: npt.ArrayLike) -> np.ndarray:
    matrix = np.asarray(as_matrix(u, shape=(2, 2)))
    if np.max(np.abs(matrix.conj().T @ matrix - np.eye(2))) > UNITARY_TOL:
        raise TeleportError(f"{name} is not unitary")
    return matrix


def protocol_channel(
    shared: DensityMatrix,
    rot_a: npt.ArrayLike = IDENTITY,
    rot_b: npt.ArrayLike = IDENTITY,
    source: str = "",
) -> TeleportChannel:
    """Outcome-averaged channel of the standard protocol after local rotations."""
    local = np.kron(_check_unitary("rot_a", rot_a), _check_unitary("rot_b", rot_b))
    pair = local @ shared.matrix @ local.conj().T

    choi = np.zeros((4, 4), dtype=np.complex128)
    for i in range(2):
        for j in range(2):
            unit = np.zeros((2, 2), dtype=np.complex128)
            unit[i, j] = 1.0
            joint = np.kron(unit, pair)
            image = np.zeros((2, 2), dtype=np.complex128)
            for kind, correction in BELL_CORRECTIONS:
                measure = np.kron(outer(bell_state(kind).amplitudes), np.eye(2))
                bob = partial_trace(measure @ joint @ measure, (2, 2, 2), keep=(2,))
                image += correction @ bob @ correction.conj().T
            choi += 0.5 * np.kron(unit, image)
    return TeleportChannel(choi=choi, source=source)


def entanglement_fidelity(ch: TeleportChannel) -> float:
    phi_plus = bell_state(BellKind.PHI_PLUS).amplitudes
    return float(np.vdot(phi_plus, ch.choi @ phi_plus).real)


def average_fidelity_exact(ch: TeleportChannel) -> float:
    """Input-averaged fidelity (2 F_e + 1)/3 with F_e = <phi+|J|phi+>."""
    return (2.0 * entanglement_fidelity(ch) + 1.0) / 3.0


def singlet_fraction(rho: DensityMatrix) -> float:
    singlet = bell_state(BellKind.PSI_MINUS).amplitudes
    return float(np.vdot(singlet, rho.matrix @ singlet).real)


def sample_haar_qubits(rng: np.random.Generator, n: int) -> np.ndarray:
    cos_theta = rng.uniform(-1.0, 1.0, size=n)
    phi = rng.uniform(0.0, 2.0 * math.pi, size=n)
    states = np.empty((n, 2), dtype=np.complex128)
    states[:, 0] = np.sqrt((1.0 + cos_theta) / 2.0)
    states[:, 1] = np.exp(1j * phi) * np.sqrt((1.0 - cos_theta) / 2.0)
    return states


def _chunk_fidelities(choi: np.ndarray, seed: int, stream: int, index: int, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream, index))))
    psi = sample_haar_qubits(rng, size)
    # <psi|Lambda(|psi><psi|)|psi> = 2 <conj(psi) x psi| J |conj(psi) x psi>
    v = (psi.conj()[:, :, None] * psi[:, None, :]).reshape(size, 4)
    return 2.0 * np.einsum("ni,ij,nj->n", v.conj(), choi, v).real


def average_fidelity_mc(
    ch: TeleportChannel,
    n: int,
    seed: int,
    stream: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
) -> FidelityEstimate:
    if n < MIN_SAMPLES:
        raise TeleportError(f"Monte Carlo needs at least {MIN_SAMPLES} samples, got {n}")
    if seed < 0 or stream < 0:
        raise TeleportError("Seed and stream must be non-negative integers")
    if chunk_size < 1:
        raise TeleportError(f"Chunk size must be positive, got {chunk_size}")

    chunks = [(k, min(chunk_size, n - start)) for k, start in enumerate(range(0, n, chunk_size))]
    choi = np.asarray(ch.choi)
    logger.debug("MC fidelity: n=%d seed=%d stream=%d chunks=%d", n, seed, stream, len(chunks))

    def run(chunk: Tuple[int, int]) -> np.ndarray:
        return _chunk_fidelities(choi, seed, stream, chunk[0], chunk[1])

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts: List[np.ndarray] = list(pool.map(run, chunks))
    else:
        parts = [run(chunk) for chunk in chunks]
    values = np.concatenate(parts)

    mean = math.fsum(values) / n
    variance = math.fsum((values - mean) ** 2) / (n - 1)
    return FidelityEstimate(
        mean=mean, std_error=math.sqrt(variance / n), samples=n, seed=seed, stream=stream
    )


def quaternion_from_rotation(r: npt.ArrayLike) -> np.ndarray:
    """Unit quaternion (w, x, y, z) of a proper rotation, branch chosen for stability."""
    r = np.asarray(as_real3(r))
    decision = np.append(np.diag(r), np.trace(r))
    choice = int(np.argmax(decision))
    quat = np.empty(4)
    if choice != 3:
        i = choice
        j = (i + 1) % 3
        k = (j + 1) % 3
        quat[i + 1] = 1.0 - decision[3] + 2.0 * r[i, i]
        quat[j + 1] = r[j, i] + r[i, j]
        quat[k + 1] = r[k, i] + r[i, k]
        quat[0] = r[k, j] - r[j, k]
    else:
        quat[1] = r[2, 1] - r[1, 2]
        quat[2] = r[0, 2] - r[2, 0]
        quat[3] = r[1, 0] - r[0, 1]
        quat[0] = 1.0 + decision[3]
    return quat / np.linalg.norm(quat)


def lift_rotation(r: npt.ArrayLike) -> ComplexMatrix:
    """SU(2) element U with U sigma_k U^dag = sum_i R_ik sigma_i."""
    w, x, y, z = quaternion_from_rotation(r)
    sigma_x, sigma_y, sigma_z = PAULIS
    return as_matrix(w * np.eye(2) - 1j * (x * sigma_x + y * sigma_y + z * sigma_z))


def rotation_from_unitary(u: npt.ArrayLike) -> RealMatrix3:
    """R_ik = (1/2) Tr[sigma_i U sigma_k U^dag]."""
    u = np.asarray(u, dtype=np.complex128)
    r = np.array(
        [[0.5 * np.trace(si @ u @ sk @ u.conj().T).real for sk in PAULIS] for si in PAULIS]
    )
    return as_real3(r)


def optimal_rotations(c: npt.ArrayLike) -> OptimalRotations:
    """Local rotations making the correlation matrix diagonal with the most negative trace.

    Under U_A x U_B the correlation matrix becomes R_A C R_B^T. With
    C = U diag(s1, s2, +-s3) V^T, taking R_A = F U^T and R_B = V^T (F a pi
    rotation about z) leaves diag(-s1, -s2, -+s3), and the protocol fidelity
    is (1 - Tr/3)/2.
    """
    decomposition = svd3(c)
    s1, s2, s3 = decomposition.singular_values
    so3_a = as_real3(_FLIP_XY @ decomposition.u.T)
    so3_b = as_real3(decomposition.v.T)
    attains = decomposition.det_sign < 0 or s3 <= SVD_RANK_TOL
    if attains:
        predicted = fidelity_from_singular_sum(s1 + s2 + s3)
    else:
        predicted = fidelity_from_singular_sum(s1 + s2 - s3)
        logger.warning("det(C) > 0: protocol fidelity %.6f is below the (1 + N/3)/2 bound", predicted)
    return OptimalRotations(
        rot_a=lift_rotation(so3_a),
        rot_b=lift_rotation(so3_b),
        predicted_fidelity=predicted,
        so3_a=so3_a,
        so3_b=so3_b,
        det_sign=decomposition.det_sign,
        attains_bound=attains,
    )


def verify_fidelity(
    shared: DensityMatrix,
    n: int = DEFAULT_SAMPLES,
    seed: int = 0,
    stream: int = 0,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    workers: int = 1,
    source: str = "",
) -> FidelityVerification:
    """Check (1 + N/3)/2 against a sampled run of the rotated protocol."""
    formula = fidelity_bound(shared)
    c = correlation_matrix(shared)
    rotations = optimal_rotations(c)
    channel = protocol_channel(shared, rotations.rot_a, rotations.rot_b, source=source)
    simulated = average_fidelity_mc(channel, n, seed, stream=stream, chunk_size=chunk_size, workers=workers)

    target = formula if rotations.attains_bound else rotations.predicted_fidelity
    tolerance = max(3.0 * simulated.std_error, FIDELITY_ABS_TOL)
    consistent = abs(target - simulated.mean) <= tolerance
    if not consistent:
        logger.warning(
            "Simulated fidelity %.6f +- %.2e disagrees with %.6f", simulated.mean, simulated.std_error, target
        )
    if formula > CLASSICAL_FIDELITY:
        logger.debug("Channel beats the classical fidelity 2/3 (%.6f)", formula)
    return FidelityVerification(
        formula=formula,
        predicted=rotations.predicted_fidelity,
        exact=average_fidelity_exact(channel),
        simulated=simulated,
        det_c=float(np.linalg.det(np.asarray(c))),
        attains_bound=rotations.attains_bound,
        consistent=consistent,
    )
