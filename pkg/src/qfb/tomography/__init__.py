"""Two-qubit state tomography from joint-readout records."""

from .reconstruct import (
    LinearInversionResult,
    MleResult,
    RankDeficientSettingsError,
    chi_square,
    linear_inversion,
    log_likelihood,
    mle_reconstruct,
    project_to_physical,
)
from .records import (
    FULL_SET,
    MINIMAL_SET,
    MeasurementRecord,
    TomographySettings,
    expected_records,
    pauli_basis,
    simulate_records,
)

__all__ = [
    "FULL_SET",
    "MINIMAL_SET",
    "LinearInversionResult",
    "MeasurementRecord",
    "MleResult",
    "RankDeficientSettingsError",
    "TomographySettings",
    "chi_square",
    "expected_records",
    "linear_inversion",
    "log_likelihood",
    "mle_reconstruct",
    "pauli_basis",
    "project_to_physical",
    "simulate_records",
]
