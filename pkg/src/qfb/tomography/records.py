"""
Tomography settings and synthetic joint-readout records.

Every setting pre-rotates the two qubits with U = U_B x U_A and measures the
averaged joint-readout voltage, whose expectation is

    Tr(O U rho U^dagger),   O = b0 + bA Z_A + bB Z_B + bBA Z_B Z_A.
"""

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ..parity.cavity import BetaCoefficients
from ..parity.states import TwoQubitDensityMatrix

logger = logging.getLogger(__name__)

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (_I2, _X, _Y, _Z)


def _rotation(axis: NDArray[np.complex128], angle: float) -> NDArray[np.complex128]:
    return math.cos(angle / 2) * _I2 - 1j * math.sin(angle / 2) * axis


ROTATIONS: dict[str, NDArray[np.complex128]] = {
    "I": _I2,
    "X180": _rotation(_X, math.pi),
    "X90": _rotation(_X, math.pi / 2),
    "Y90": _rotation(_Y, math.pi / 2),
    "Xm90": _rotation(_X, -math.pi / 2),
    "Ym90": _rotation(_Y, -math.pi / 2),
}
FULL_SET = ("I", "X180", "X90", "Y90", "Xm90", "Ym90")
MINIMAL_SET = ("I", "X180", "X90", "Y90")


def pauli_basis() -> NDArray[np.complex128]:
    """The 16 two-qubit Paulis sigma_m x sigma_n, shape (16, 4, 4); index 0 is identity."""
    return np.array([np.kron(a, b) for a, b in itertools.product(PAULIS, PAULIS)])


class TomographySettings(BaseModel):
    """Pre-rotations, joint-readout coefficients and averaging of a tomography run."""

    model_config = ConfigDict(frozen=True)

    rotations: tuple[tuple[str, str], ...] = Field(
        default=tuple(itertools.product(FULL_SET, FULL_SET)),
        description="(rotation_a, rotation_b) per setting",
    )
    b0: float = 0.0
    b_a: float = 1.0
    b_b: float = 1.0
    b_ba: float = 1.0
    shots: int = Field(default=1000, ge=1, description="Shots averaged per setting")
    noise_std: float = Field(default=1.0, gt=0.0, description="Single-shot voltage noise")

    @field_validator("rotations")
    @classmethod
    def check_rotations(cls, v: tuple[tuple[str, str], ...]) -> tuple[tuple[str, str], ...]:
        if not v:
            raise ValueError("at least one tomography setting is required")
        unknown = {label for pair in v for label in pair} - set(ROTATIONS)
        if unknown:
            raise ValueError(f"unknown rotation labels {sorted(unknown)}; valid: {list(ROTATIONS)}")
        return v

    @classmethod
    def full(cls, **kwargs: object) -> "TomographySettings":
        """The overcomplete 36-setting set."""
        pairs = tuple(itertools.product(FULL_SET, FULL_SET))
        return cls.model_validate({**kwargs, "rotations": pairs})

    @classmethod
    def minimal(cls, **kwargs: object) -> "TomographySettings":
        """16 settings from {I, X180, X90, Y90} on each qubit."""
        pairs = tuple(itertools.product(MINIMAL_SET, MINIMAL_SET))
        return cls.model_validate({**kwargs, "rotations": pairs})

    @property
    def beta(self) -> BetaCoefficients:
        return BetaCoefficients(b0=self.b0, bA=self.b_a, bB=self.b_b, bBA=self.b_ba)

    @property
    def stderr(self) -> float:
        """Standard error of one averaged record."""
        return self.noise_std / math.sqrt(self.shots)

    def __len__(self) -> int:
        return len(self.rotations)

    def observable(self) -> NDArray[np.complex128]:
        return np.diag(self.beta.means()).astype(complex)

    def unitary(self, index: int) -> NDArray[np.complex128]:
        rot_a, rot_b = self.rotations[index]
        return np.kron(ROTATIONS[rot_b], ROTATIONS[rot_a])

    def operators(self) -> NDArray[np.complex128]:
        """Effective observables U^dagger O U per setting, shape (n, 4, 4)."""
        o = self.observable()
        return np.array([u.conj().T @ o @ u for u in (self.unitary(k) for k in range(len(self)))])

    def design_matrix(self) -> NDArray[np.float64]:
        """A[k, m] = Tr(O_k P_m) / 4, so that record k = A[k] . r for rho = sum_m r_m P_m / 4."""
        ops = self.operators()
        return np.real(np.einsum("kij,mji->km", ops, pauli_basis())) / 4.0


@dataclass(frozen=True)
class MeasurementRecord:
    """Averaged voltage of one setting."""

    setting_id: int
    rotation_a: str
    rotation_b: str
    mean_v: float
    stderr_v: float

    def __post_init__(self) -> None:
        if not self.stderr_v > 0:
            raise ValueError(f"standard error must be positive, got {self.stderr_v}")


def expected_records(
    rho: TwoQubitDensityMatrix, settings: TomographySettings
) -> NDArray[np.float64]:
    """Noise-free record means Tr(O U rho U^dagger)."""
    return np.real(np.einsum("kij,ji->k", settings.operators(), rho.matrix))


def simulate_records(
    rho: TwoQubitDensityMatrix,
    settings: TomographySettings,
    rng: np.random.Generator | None,
) -> list[MeasurementRecord]:
    """
    Averaged joint-readout records, one per setting.

    Args:
        rho: True state
        settings: Tomography settings
        rng: Generator for the Gaussian averaging noise; None gives noiseless records
    """
    means = expected_records(rho, settings)
    if rng is not None:
        means = means + rng.normal(0.0, settings.stderr, size=means.size)

    return [
        MeasurementRecord(
            setting_id=k,
            rotation_a=rot_a,
            rotation_b=rot_b,
            mean_v=float(means[k]),
            stderr_v=settings.stderr,
        )
        for k, (rot_a, rot_b) in enumerate(settings.rotations)
    ]
