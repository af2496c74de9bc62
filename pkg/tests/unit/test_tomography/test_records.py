"""
Tests for tomography settings and synthetic records.

These tests verify:
- The 36- and 16-setting pre-rotation sets
- Forward model of the joint readout
- Record validation and noise
"""

import numpy as np
import pytest
from pydantic import ValidationError

from qfb.parity.states import TwoQubitDensityMatrix, bell_state, product_state
from qfb.tomography.records import (
    MeasurementRecord,
    TomographySettings,
    expected_records,
    pauli_basis,
    simulate_records,
)


def test_setting_sets():
    assert len(TomographySettings.full()) == 36
    assert len(TomographySettings.minimal()) == 16
    assert TomographySettings.full(shots=400, noise_std=2.0).stderr == pytest.approx(0.1)


def test_unknown_rotation_rejected():
    with pytest.raises(ValidationError, match="unknown rotation"):
        TomographySettings(rotations=(("I", "Z45"),))


def test_pauli_basis_is_orthogonal():
    basis = pauli_basis()
    gram = np.real(np.einsum("aij,bji->ab", basis, basis))

    np.testing.assert_allclose(gram, 4.0 * np.eye(16), atol=1e-12)


def test_ground_state_identity_setting():
    """Test that |00> with no pre-rotation reads b0 + bA + bB + bBA."""
    settings = TomographySettings.full(b0=0.1, b_a=0.2, b_b=0.3, b_ba=0.4)

    records = expected_records(product_state(0.0, 0.0), settings)

    assert settings.rotations[0] == ("I", "I")
    assert records[0] == pytest.approx(1.0)


def test_mixed_state_reads_offset():
    settings = TomographySettings.full(b0=0.7)

    records = expected_records(TwoQubitDensityMatrix.maximally_mixed(), settings)

    np.testing.assert_allclose(records, 0.7, atol=1e-12)


def test_flip_on_qubit_a():
    """Test that X180 on qubit A maps |00> onto |01>."""
    settings = TomographySettings(rotations=(("X180", "I"),), b0=0.0, b_a=1.0, b_b=0.0, b_ba=0.0)

    assert expected_records(product_state(0.0, 0.0), settings)[0] == pytest.approx(-1.0)


def test_noiseless_records_match_forward_model():
    settings = TomographySettings.minimal()
    rho = bell_state()

    records = simulate_records(rho, settings, None)

    np.testing.assert_allclose([r.mean_v for r in records], expected_records(rho, settings))
    assert [(r.rotation_a, r.rotation_b) for r in records] == list(settings.rotations)


def test_record_noise_level():
    settings = TomographySettings.full(shots=100, noise_std=5.0)
    rng = np.random.default_rng(40)
    rho = bell_state()

    residuals = np.concatenate(
        [
            np.array([r.mean_v for r in simulate_records(rho, settings, rng)])
            - expected_records(rho, settings)
            for _ in range(300)
        ]
    )

    assert residuals.mean() == pytest.approx(0.0, abs=4 * 0.5 / np.sqrt(residuals.size))
    assert residuals.std() == pytest.approx(0.5, rel=0.05)


def test_record_requires_positive_stderr():
    with pytest.raises(ValueError):
        MeasurementRecord(0, "I", "I", 0.1, 0.0)
