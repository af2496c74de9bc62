"""
Tests for linear-inversion and maximum-likelihood tomography.

These tests verify:
- Exact recovery from noiseless records
- Physical output of the MLE for unphysical linear estimates
- Monotone likelihood along the optimizer path
- Convergence reporting and settings validation
"""

import numpy as np
import pytest

from qfb.parity.metrics import concurrence, state_fidelity
from qfb.parity.states import bell_state, random_density, werner
from qfb.tomography.reconstruct import (
    RankDeficientSettingsError,
    check_rank,
    chi_square,
    factor_of,
    linear_inversion,
    log_likelihood,
    mle_reconstruct,
    project_to_physical,
)
from qfb.tomography.records import TomographySettings, simulate_records


@pytest.fixture
def settings() -> TomographySettings:
    return TomographySettings.full(b0=0.0, b_a=1.0, b_b=1.0, b_ba=1.0, shots=1000, noise_std=4.0)


@pytest.mark.parametrize("factory", [TomographySettings.full, TomographySettings.minimal])
def test_setting_sets_are_complete(factory):
    assert check_rank(factory()).shape[1] == 16


def test_rank_deficient_settings():
    settings = TomographySettings(rotations=(("I", "I"), ("X180", "I")))
    records = simulate_records(bell_state(), settings, None)

    with pytest.raises(RankDeficientSettingsError):
        linear_inversion(records, settings)
    with pytest.raises(RankDeficientSettingsError):
        mle_reconstruct(records, settings)


def test_records_must_match_settings(settings):
    records = simulate_records(bell_state(), TomographySettings.minimal(), None)

    with pytest.raises(ValueError):
        linear_inversion(records, settings)


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_noiseless_linear_inversion_is_exact(settings, seed):
    rho = random_density(np.random.default_rng(seed))

    result = linear_inversion(simulate_records(rho, settings, None), settings)

    np.testing.assert_allclose(result.rho_raw, rho.matrix, atol=1e-9)
    assert result.physical


def test_noiseless_mle_recovers_bell_state(settings):
    rho = bell_state()

    result = mle_reconstruct(simulate_records(rho, settings, None), settings)

    assert state_fidelity(result.rho, rho) > 0.9999


def test_mle_on_noisy_mixed_state(settings):
    """Test convergence and accuracy on a full-rank state."""
    rho = werner(0.8)
    records = simulate_records(rho, settings, np.random.default_rng(41))

    result = mle_reconstruct(records, settings)

    assert result.converged
    assert result.iterations > 0
    assert state_fidelity(result.rho, rho) > 0.98
    assert result.log_likelihood == pytest.approx(log_likelihood(result.rho, records, settings))


def test_mle_is_physical_where_linear_inversion_is_not():
    """Test heavily noisy records of a pure state."""
    settings = TomographySettings.full(shots=4, noise_std=4.0)
    rho = bell_state()
    records = simulate_records(rho, settings, np.random.default_rng(42))

    linear = linear_inversion(records, settings)
    result = mle_reconstruct(records, settings)

    assert not linear.physical
    assert result.rho.eigenvalues().min() >= -1e-9
    projected = project_to_physical(linear.rho_raw)
    assert chi_square(result.rho, records, settings) <= chi_square(projected, records, settings)


def test_mle_history_is_monotone(settings):
    records = simulate_records(werner(0.6), settings, np.random.default_rng(43))

    result = mle_reconstruct(records, settings)

    assert len(result.history) == result.iterations
    assert np.all(np.diff(result.history) <= 1e-12)


def test_iteration_limit_reports_non_convergence(settings):
    records = simulate_records(werner(0.6), settings, np.random.default_rng(44))

    result = mle_reconstruct(records, settings, max_iter=1)

    assert not result.converged


def test_concurrence_agrees_between_estimators(settings):
    rho = bell_state()
    records = simulate_records(rho, settings, np.random.default_rng(45))

    linear = project_to_physical(linear_inversion(records, settings).rho_raw)
    mle = mle_reconstruct(records, settings).rho

    assert abs(concurrence(mle) - concurrence(linear)) < 0.1
    assert concurrence(mle) > 0.8


def test_factor_of_positive_state():
    rho = random_density(np.random.default_rng(46)).matrix

    t = factor_of(rho)

    np.testing.assert_allclose(t.conj().T @ t, rho, atol=1e-12)
    np.testing.assert_allclose(np.triu(t, k=1), 0.0)


def test_projection_of_negative_matrix():
    rho = project_to_physical(np.diag([0.7, 0.5, -0.1, -0.1]).astype(complex))

    np.testing.assert_allclose(rho.populations(), [0.7 / 1.2, 0.5 / 1.2, 0.0, 0.0])
