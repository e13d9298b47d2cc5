"""Inseparability, Bell-CHSH and teleportation-fidelity diagnostics.

Every quantity has a numeric route through the state's matrix. Where a closed
form exists for the deletion-machine family it is exposed separately
(``closed_form_w``, ``closed_form_u``) so the two can be audited against each
other.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Dict, NamedTuple, Tuple

import numpy as np

from .linalg import NumericalError, RealMatrix3, as_real3, hermitian_eigenvalues, partial_transpose_b, svd3
from .states import PAULIS, DensityMatrix

logger = logging.getLogger(__name__)

SEPARABILITY_TOL = 1e-10
BELL_TOL = 1e-10
CLAMP_TOL = 1e-12
IMAG_TOL = 1e-12

CLASSICAL_FIDELITY = 2.0 / 3.0
WERNER_ENTANGLED_P = 1.0 / 3.0
WERNER_BELL_P = 1.0 / math.sqrt(2.0)

# Entries rho_{m mu, n nu} as (row label, column label). Row i of this table is
# row i of the partially transposed operator, so W4 = det(rho^{T_B}) and W3 is
# its leading 3x3 principal minor.
W4_LABELS = (
    (("00", "00"), ("01", "00"), ("00", "10"), ("01", "10")),
    (("00", "01"), ("01", "01"), ("00", "11"), ("01", "11")),
    (("10", "00"), ("11", "00"), ("10", "10"), ("11", "10")),
    (("10", "01"), ("11", "01"), ("10", "11"), ("11", "11")),
)


class CriteriaError(ValueError):
    pass


class HorodeckiQuantities(NamedTuple):
    u: Tuple[float, float, float]
    big_m: float
    big_n: float


@dataclass(frozen=True)
class CriteriaReport:
    w3: float
    w4: float
    ppt_spectrum: Tuple[float, float, float, float]
    u: Tuple[float, float, float]
    big_m: float
    big_n: float
    f_max: float
    inseparable: bool
    bell_violated: bool
    chsh_max: float

    @property
    def ppt_min(self) -> float:
        return self.ppt_spectrum[0]

    @property
    def beats_classical(self) -> bool:
        return self.f_max > CLASSICAL_FIDELITY

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data["ppt_spectrum"] = list(self.ppt_spectrum)
        data["u"] = list(self.u)
        return data


def _entry(rho: DensityMatrix, row: str, col: str) -> float:
    return rho.element(int(row[0]), int(row[1]), int(col[0]), int(col[1])).real


def w_determinants(rho: DensityMatrix) -> Tuple[float, float]:
    w4_matrix = np.array([[_entry(rho, row, col) for row, col in line] for line in W4_LABELS])
    w3 = float(np.linalg.det(w4_matrix[:3, :3]))
    w4 = float(np.linalg.det(w4_matrix))
    return w3, w4


def closed_form_w(alpha: float, m1: float) -> Tuple[float, float]:
    """W3 and W4 of the deletion-machine output for any real blank state."""
    if not (0.0 <= alpha <= 1.0 and 0.0 <= m1 <= 1.0):
        raise CriteriaError(f"alpha and m1 must lie in [0, 1], got alpha={alpha}, m1={m1}")
    a2 = alpha * alpha
    b2 = 1.0 - a2
    m1_2 = m1 * m1
    m2_2 = 1.0 - m1_2
    w3 = a2**3 * b2**2 * m1_2 * (a2 + m1_2 * b2)
    w4 = -(a2**3) * b2**3 * (a2 * a2 * m2_2 + m1_2 * b2 * b2 + a2 * b2)
    return w3, w4


def ppt_spectrum(rho: DensityMatrix) -> Tuple[float, float, float, float]:
    values = hermitian_eigenvalues(partial_transpose_b(rho.matrix))
    return tuple(float(x) for x in values)  # type: ignore[return-value]


def is_inseparable(spectrum: Tuple[float, ...]) -> bool:
    return min(spectrum) < -SEPARABILITY_TOL


def correlation_matrix(rho: DensityMatrix) -> RealMatrix3:
    """C_ij = Tr[rho sigma_i x sigma_j] with (sigma_1, sigma_2, sigma_3) = (X, Y, Z)."""
    c = np.empty((3, 3))
    for i, sigma_i in enumerate(PAULIS):
        for j, sigma_j in enumerate(PAULIS):
            value = complex(np.trace(rho.matrix @ np.kron(sigma_i, sigma_j)))
            if abs(value.imag) > IMAG_TOL:
                raise NumericalError(f"Correlation C[{i},{j}] has imaginary part {value.imag:.3e}")
            c[i, j] = value.real
    return as_real3(c)


def _clamp(value: float) -> float:
    if value >= 0.0:
        return value
    if value >= -CLAMP_TOL:
        return 0.0
    raise NumericalError(f"Eigenvalue {value:.3e} of C^T C is negative beyond rounding")


def horodecki_quantities(rho: DensityMatrix) -> HorodeckiQuantities:
    """Spectrum u of U = C^T C (descending), M = sum of the two largest, N = sum sqrt(u)."""
    c = np.asarray(correlation_matrix(rho))
    values = hermitian_eigenvalues(c.T @ c)
    u = tuple(_clamp(float(x)) for x in values[::-1])
    big_m = u[0] + u[1]
    # singular values of C are sqrt(u_i); taking them from the SVD keeps tiny u_i accurate
    big_n = float(sum(svd3(c).singular_values))
    return HorodeckiQuantities(u=u, big_m=big_m, big_n=big_n)  # type: ignore[arg-type]


def closed_form_u(alpha: float) -> Tuple[float, float, float]:
    """(u1, u2, u3) of the deletion output with m1 = m2 = 1/sqrt(2), in closed form.

    u1 = 4a^4 - 8a^6 + 4a^8 and u2,3 = A +- sqrt(B)/2. The labels are kept,
    not sorted: u1 and u2 are the two largest.

    With k = 2a^2(1 - a^2) and d = 2a^2 - 1 these are u1 = k^2,
    A = k^2 + d^2/2 and B = d^2 (d^2 + 4k^2). B vanishes at a = 1/sqrt(2),
    where its expanded degree-12 form loses every significant digit, so the
    root is taken from the factored form.
    """
    if not 0.0 < alpha < 1.0:
        raise CriteriaError(f"Closed-form spectrum needs 0 < alpha < 1, got {alpha}")
    a2 = alpha * alpha
    k = 2.0 * a2 * (1.0 - a2)
    d = 2.0 * a2 - 1.0
    u1 = k * k
    big_a = k * k + 0.5 * d * d
    root = 0.5 * abs(d) * math.sqrt(d * d + 4.0 * k * k)
    return u1, big_a + root, big_a - root


def fidelity_from_singular_sum(big_n: float) -> float:
    """Optimal teleportation fidelity (1 + N/3)/2."""
    return 0.5 * (1.0 + big_n / 3.0)


def closed_form_fidelity(alpha: float) -> float:
    return fidelity_from_singular_sum(sum(math.sqrt(max(0.0, u)) for u in closed_form_u(alpha)))


def fidelity_bound(rho: DensityMatrix) -> float:
    return fidelity_from_singular_sum(horodecki_quantities(rho).big_n)


def analyze(rho: DensityMatrix) -> CriteriaReport:
    w3, w4 = w_determinants(rho)
    spectrum = ppt_spectrum(rho)
    quantities = horodecki_quantities(rho)
    report = CriteriaReport(
        w3=w3,
        w4=w4,
        ppt_spectrum=spectrum,
        u=quantities.u,
        big_m=quantities.big_m,
        big_n=quantities.big_n,
        f_max=fidelity_from_singular_sum(quantities.big_n),
        inseparable=is_inseparable(spectrum),
        bell_violated=quantities.big_m > 1.0 + BELL_TOL,
        chsh_max=2.0 * math.sqrt(quantities.big_m),
    )
    logger.debug(
        "analyze: ppt_min=%.3e M=%.6f N=%.6f F=%.6f", report.ppt_min, report.big_m, report.big_n, report.f_max
    )
    return report
