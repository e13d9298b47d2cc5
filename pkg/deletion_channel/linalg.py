"""Dense matrix kernel for the two-qubit (plus ancilla) operators used here.

Storage is plain ``numpy`` arrays, row-major and dense. Every operator in this
package is at most 12x12, so nothing here is tuned beyond that. The
eigensolver is a cyclic Jacobi iteration written out explicitly instead of
delegating to LAPACK; the tests compare it against ``numpy.linalg``.
"""

from __future__ import annotations

import logging
import math
from functools import reduce
from typing import NamedTuple, Sequence, Tuple

import numpy as np
import numpy.typing as npt

logger = logging.getLogger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]
RealMatrix3 = npt.NDArray[np.float64]

HERMITIAN_TOL = 1e-12
JACOBI_OFF_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100
MAX_EIGEN_DIM = 12
SVD_RANK_TOL = 1e-12


class LinalgError(RuntimeError):
    pass


class NumericalError(LinalgError):
    pass


class ConvergenceError(NumericalError):
    pass


class Svd3(NamedTuple):
    u: RealMatrix3
    singular_values: Tuple[float, float, float]
    v: RealMatrix3
    det_sign: int


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def as_matrix(data: npt.ArrayLike, shape: Tuple[int, int] | None = None) -> ComplexMatrix:
    matrix = np.array(data, dtype=np.complex128)
    if matrix.ndim != 2:
        raise LinalgError(f"Expected a 2-d matrix, got shape {matrix.shape}")
    if shape is not None and matrix.shape != tuple(shape):
        raise LinalgError(f"Expected shape {tuple(shape)}, got {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise LinalgError("Matrix contains non-finite entries")
    return _frozen(matrix)


def as_real3(data: npt.ArrayLike) -> RealMatrix3:
    matrix = np.array(data, dtype=np.float64)
    if matrix.shape != (3, 3):
        raise LinalgError(f"Expected a 3x3 real matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise LinalgError("Matrix contains non-finite entries")
    return _frozen(matrix)


def kron(a: npt.ArrayLike, b: npt.ArrayLike) -> ComplexMatrix:
    return _frozen(np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128)))


def kron_all(*factors: npt.ArrayLike) -> ComplexMatrix:
    return reduce(kron, factors)


def matmul(*factors: npt.ArrayLike) -> ComplexMatrix:
    return _frozen(reduce(np.matmul, (np.asarray(f, dtype=np.complex128) for f in factors)))


def adjoint(m: npt.ArrayLike) -> ComplexMatrix:
    return _frozen(np.asarray(m, dtype=np.complex128).conj().T.copy())


def trace(m: npt.ArrayLike) -> complex:
    return complex(np.trace(np.asarray(m, dtype=np.complex128)))


def scale(m: npt.ArrayLike, factor: complex) -> ComplexMatrix:
    return _frozen(np.asarray(m, dtype=np.complex128) * factor)


def add(*terms: npt.ArrayLike) -> ComplexMatrix:
    return _frozen(reduce(np.add, (np.asarray(t, dtype=np.complex128) for t in terms)))


def outer(ket: npt.ArrayLike, bra: npt.ArrayLike | None = None) -> ComplexMatrix:
    """|ket><bra|, with ``bra`` given as a ket (it is conjugated here)."""
    left = np.asarray(ket, dtype=np.complex128).ravel()
    right = left if bra is None else np.asarray(bra, dtype=np.complex128).ravel()
    return _frozen(np.outer(left, right.conj()))


def hermiticity_error(m: npt.ArrayLike) -> float:
    matrix = np.asarray(m, dtype=np.complex128)
    return float(np.max(np.abs(matrix - matrix.conj().T))) if matrix.size else 0.0


def partial_transpose_b(rho: npt.ArrayLike) -> ComplexMatrix:
    """rho^{T_B}_{m mu, n nu} = rho_{m nu, n mu} on a 2x2 system."""
    matrix = np.asarray(rho, dtype=np.complex128)
    if matrix.shape != (4, 4):
        raise LinalgError(f"Partial transpose needs a 4x4 operator, got {matrix.shape}")
    # axes are (m, mu, n, nu); swapping mu and nu transposes the second qubit
    return _frozen(matrix.reshape(2, 2, 2, 2).transpose(0, 3, 2, 1).reshape(4, 4).copy())


def partial_trace(
    state_or_rho: npt.ArrayLike, subsystem_dims: Sequence[int], keep: Sequence[int]
) -> ComplexMatrix:
    """Reduced operator on the subsystems listed in ``keep``.

    Accepts a ket (traced as |psi><psi|) or a square operator. Subsystems are
    ordered as in ``subsystem_dims``; the kept ones stay in that order.
    """
    data = np.asarray(state_or_rho, dtype=np.complex128)
    dims = [int(d) for d in subsystem_dims]
    if any(d < 1 for d in dims):
        raise LinalgError(f"Invalid subsystem dimensions {dims}")
    total = math.prod(dims)
    if data.ndim == 1:
        if data.shape[0] != total:
            raise LinalgError(f"State of dimension {data.shape[0]} does not match dims {dims}")
        data = np.outer(data, data.conj())
    if data.shape != (total, total):
        raise LinalgError(f"Operator of shape {data.shape} does not match dims {dims}")

    kept = sorted(set(int(k) for k in keep))
    if any(k < 0 or k >= len(dims) for k in kept):
        raise LinalgError(f"Kept subsystems {list(keep)} out of range for {len(dims)} subsystems")

    tensor = data.reshape(dims + dims)
    remaining = len(dims)
    for index in sorted((i for i in range(len(dims)) if i not in kept), reverse=True):
        tensor = np.trace(tensor, axis1=index, axis2=index + remaining)
        remaining -= 1
    reduced_dim = math.prod(dims[k] for k in kept)
    return _frozen(np.asarray(tensor).reshape(reduced_dim, reduced_dim).copy())


def _jacobi_symmetric(a: np.ndarray, max_sweeps: int) -> Tuple[np.ndarray, np.ndarray, int]:
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    vectors = np.eye(n)
    threshold = JACOBI_OFF_TOL * max(1.0, float(np.linalg.norm(a)))

    for sweep in range(max_sweeps + 1):
        off = math.sqrt(float(np.sum(np.square(a - np.diag(np.diag(a))))))
        if off <= threshold:
            return np.diag(a).copy(), vectors, sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                theta = (float(a[q, q]) - float(a[p, p])) / (2.0 * apq)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0

                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q

    raise ConvergenceError(f"Jacobi iteration did not converge after {max_sweeps} sweeps")


def symmetric_eigh(m: npt.ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    matrix = np.asarray(m, dtype=np.float64)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise LinalgError(f"Expected a square matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise LinalgError("Matrix contains non-finite entries")
    if hermiticity_error(matrix) > HERMITIAN_TOL:
        raise LinalgError("Matrix is not symmetric")
    values, vectors, sweeps = _jacobi_symmetric(0.5 * (matrix + matrix.T), JACOBI_MAX_SWEEPS)
    logger.debug("Jacobi converged in %d sweeps (n=%d)", sweeps, matrix.shape[0])
    order = np.argsort(values, kind="stable")
    return _frozen(values[order]), _frozen(vectors[:, order])


def hermitian_eigenvalues(m: npt.ArrayLike) -> np.ndarray:
    """Real eigenvalues of a Hermitian matrix, ascending.

    H = A + iB is diagonalised through the real symmetric embedding
    [[A, -B], [B, A]], whose spectrum is that of H with every value doubled.
    """
    matrix = np.asarray(m, dtype=np.complex128)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise LinalgError(f"Expected a square matrix, got shape {matrix.shape}")
    if matrix.shape[0] > MAX_EIGEN_DIM:
        raise LinalgError(f"Eigensolver supports dimensions up to {MAX_EIGEN_DIM}")
    if not np.all(np.isfinite(matrix)):
        raise LinalgError("Matrix contains non-finite entries")
    deviation = hermiticity_error(matrix)
    if deviation > HERMITIAN_TOL:
        raise LinalgError(f"Matrix is not Hermitian (max deviation {deviation:.3e})")

    hermitian = 0.5 * (matrix + matrix.conj().T)
    real, imag = hermitian.real, hermitian.imag
    if not np.any(imag):
        values, _, sweeps = _jacobi_symmetric(real, JACOBI_MAX_SWEEPS)
        logger.debug("Jacobi converged in %d sweeps (real n=%d)", sweeps, real.shape[0])
        return _frozen(np.sort(values))

    embedded = np.block([[real, -imag], [imag, real]])
    values, _, sweeps = _jacobi_symmetric(embedded, JACOBI_MAX_SWEEPS)
    logger.debug("Jacobi converged in %d sweeps (embedded n=%d)", sweeps, embedded.shape[0])
    values = np.sort(values)
    return _frozen(0.5 * (values[0::2] + values[1::2]))


def _orthogonal_unit(u: np.ndarray) -> np.ndarray:
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(u)))] = 1.0
    w = np.cross(u, axis)
    return w / np.linalg.norm(w)


def svd3(m: npt.ArrayLike) -> Svd3:
    """SVD of a real 3x3 matrix with both factors proper rotations.

    m = U diag(s1, s2, det_sign * s3) V^T with s1 >= s2 >= s3 >= 0 and
    det U = det V = +1; a reflection is carried by the sign on s3.
    """
    matrix = np.asarray(as_real3(m))
    eigvals, eigvecs = symmetric_eigh(matrix.T @ matrix)
    v = np.array(eigvecs[:, np.argsort(-eigvals, kind="stable")])
    # ||m v_i|| keeps small singular values accurate, unlike sqrt of the eigenvalue
    singular = np.linalg.norm(matrix @ v, axis=0)
    order = np.argsort(-singular, kind="stable")
    singular, v = singular[order], v[:, order]
    if np.linalg.det(v) < 0.0:
        v[:, 2] = -v[:, 2]

    if singular[0] > SVD_RANK_TOL:
        u1 = matrix @ v[:, 0] / singular[0]
        u1 /= np.linalg.norm(u1)
    else:
        u1 = np.array([1.0, 0.0, 0.0])
    if singular[1] > SVD_RANK_TOL:
        u2 = matrix @ v[:, 1] / singular[1]
        u2 -= np.dot(u1, u2) * u1
        u2 /= np.linalg.norm(u2)
    else:
        u2 = _orthogonal_unit(u1)
    u = np.column_stack([u1, u2, np.cross(u1, u2)])

    det_sign = -1 if np.linalg.det(matrix) < 0.0 else 1
    logger.debug("svd3 singular values %s det_sign %+d", singular, det_sign)
    return Svd3(
        u=_frozen(u),
        singular_values=(float(singular[0]), float(singular[1]), float(singular[2])),
        v=_frozen(v),
        det_sign=det_sign,
    )
