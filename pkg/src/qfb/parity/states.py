"""
Two-qubit density matrices.

Basis order is |00>, |01>, |10>, |11> with the left index the state of qubit
B and the right index qubit A, so kron(op_B, op_A) acts on these matrices.
Bell-state names follow the parity-measurement convention: Phi+ is the odd
combination |01> + |10>, Psi+ the even combination |00> + |11>.
"""

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field

BASIS_LABELS = ("00", "01", "10", "11")
ODD_STATES = (1, 2)
EVEN_STATES = (0, 3)

HERMITIAN_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10
EIGENVALUE_TOLERANCE = 1e-9


class InvalidDensityMatrixError(ValueError):
    """Raised when a matrix is not Hermitian, unit-trace and positive semidefinite."""


@dataclass(frozen=True, eq=False)
class TwoQubitDensityMatrix:
    """Immutable, validated 4x4 density matrix."""

    matrix: NDArray[np.complex128]

    def __post_init__(self) -> None:
        rho = np.array(self.matrix, dtype=complex)
        if rho.shape != (4, 4):
            raise InvalidDensityMatrixError(f"expected a 4x4 matrix, got shape {rho.shape}")
        if not np.all(np.isfinite(rho)):
            raise InvalidDensityMatrixError("matrix has non-finite entries")
        if np.max(np.abs(rho - rho.conj().T)) > HERMITIAN_TOLERANCE:
            raise InvalidDensityMatrixError("matrix is not Hermitian")
        trace = np.trace(rho)
        if abs(trace - 1.0) > TRACE_TOLERANCE:
            raise InvalidDensityMatrixError(f"trace must be 1, got {trace.real:.12g}")
        min_eig = float(np.linalg.eigvalsh((rho + rho.conj().T) / 2).min())
        if min_eig < -EIGENVALUE_TOLERANCE:
            raise InvalidDensityMatrixError(f"matrix has negative eigenvalue {min_eig:.3g}")

        rho.setflags(write=False)
        object.__setattr__(self, "matrix", rho)

    @classmethod
    def from_ket(cls, psi: NDArray[np.complex128]) -> "TwoQubitDensityMatrix":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls) -> "TwoQubitDensityMatrix":
        return cls(np.eye(4, dtype=complex) / 4.0)

    @classmethod
    def normalized(cls, matrix: NDArray[np.complex128]) -> "TwoQubitDensityMatrix":
        """Symmetrize and rescale to unit trace before validating."""
        m = np.asarray(matrix, dtype=complex)
        m = (m + m.conj().T) / 2.0
        return cls(m / np.trace(m).real)

    def __getitem__(self, index: tuple[int, int]) -> complex:
        return complex(self.matrix[index])

    def coherence(self, i: int, j: int) -> float:
        """Absolute value of an off-diagonal element."""
        return float(abs(self.matrix[i, j]))

    def populations(self) -> NDArray[np.float64]:
        return np.real(np.diag(self.matrix)).copy()

    def eigenvalues(self) -> NDArray[np.float64]:
        return np.linalg.eigvalsh(self.matrix)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def transform(self, unitary: NDArray[np.complex128]) -> "TwoQubitDensityMatrix":
        """U rho U^dagger."""
        u = np.asarray(unitary, dtype=complex)
        return TwoQubitDensityMatrix.normalized(u @ self.matrix @ u.conj().T)

    def expectation(self, operator: NDArray[np.complex128]) -> float:
        return float(np.real(np.trace(np.asarray(operator) @ self.matrix)))


class BellTarget(BaseModel):
    """Target Bell state (|01> + e^{i phase}|10>) or (|00> + e^{i phase}|11>), normalized."""

    model_config = ConfigDict(frozen=True)

    label: Literal["phi+", "psi+"] = "phi+"
    phase: float = Field(default=0.0, ge=0.0, lt=2 * math.pi)

    @property
    def odd(self) -> bool:
        return self.label == "phi+"

    def ket(self) -> NDArray[np.complex128]:
        i, j = ODD_STATES if self.odd else EVEN_STATES
        psi = np.zeros(4, dtype=complex)
        psi[i] = 1.0
        psi[j] = np.exp(1j * self.phase)
        return psi / math.sqrt(2.0)


PHI_PLUS = BellTarget(label="phi+")
PSI_PLUS = BellTarget(label="psi+")


def psi0() -> TwoQubitDensityMatrix:
    """Uniform superposition (|00> + |01> + |10> + |11>)/2, the parity-measurement input."""
    return TwoQubitDensityMatrix.from_ket(np.full(4, 0.5, dtype=complex))


def bell_state(target: BellTarget = PHI_PLUS) -> TwoQubitDensityMatrix:
    return TwoQubitDensityMatrix.from_ket(target.ket())


def werner(p: float, target: BellTarget = PHI_PLUS) -> TwoQubitDensityMatrix:
    """p |Bell><Bell| + (1 - p) I/4."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"Werner weight must be in [0, 1], got {p}")
    mixed = p * bell_state(target).matrix + (1.0 - p) * np.eye(4) / 4.0
    return TwoQubitDensityMatrix(mixed)


def product_state(theta_b: float, theta_a: float, phi: float = 0.0) -> TwoQubitDensityMatrix:
    """Product of two single-qubit pure states on the Bloch sphere."""

    def qubit(theta: float) -> NDArray[np.complex128]:
        return np.array([math.cos(theta / 2), np.exp(1j * phi) * math.sin(theta / 2)])

    return TwoQubitDensityMatrix.from_ket(np.kron(qubit(theta_b), qubit(theta_a)))


def as_density(rho: "TwoQubitDensityMatrix | NDArray[np.complex128]") -> TwoQubitDensityMatrix:
    """Accept a validated state or a raw array (validated here)."""
    if isinstance(rho, TwoQubitDensityMatrix):
        return rho
    return TwoQubitDensityMatrix(np.asarray(rho, dtype=complex))


def random_density(rng: np.random.Generator, rank: int = 4) -> TwoQubitDensityMatrix:
    """Random state from the Ginibre ensemble of the given rank."""
    g = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    return TwoQubitDensityMatrix.normalized(g @ g.conj().T)
