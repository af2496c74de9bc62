"""
Tests for the dispersive cavity pointer model.

These tests verify:
- Drive normalization and steady-state photon number
- Pulse and ring-down trajectories
- Integrated signal statistics and the joint-readout coefficients
- Coherence factors of the calibrated parity meter, and the clamp on unphysical growth
"""

import logging

import numpy as np
import pytest
from pydantic import ValidationError

from qfb.parity.cavity import (
    RING_DOWN_FLOOR,
    BetaCoefficients,
    CavityConfig,
    PointerTrajectory,
    beta_from_means,
    coherence_factors,
    detected_signal,
    evolve_pointer,
    identity_factors,
    signal_stats,
)
from qfb.parity.channel import unconditioned_parity_map
from qfb.parity.states import psi0


@pytest.fixture
def parity_cavity() -> CavityConfig:
    """chi/kappa close to 2 with a 117.5 kHz mismatch between the qubits."""
    return CavityConfig(
        kappa_mhz=1.5, chi_a_mhz=3.05875, chi_b_mhz=2.94125, n_ss=2.5, eta=0.8
    )


def test_exactly_one_drive_parameter():
    with pytest.raises(ValidationError):
        CavityConfig(kappa_mhz=1.0, chi_a_mhz=1.0, chi_b_mhz=1.0)
    with pytest.raises(ValidationError):
        CavityConfig(kappa_mhz=1.0, chi_a_mhz=1.0, chi_b_mhz=1.0, n_ss=1.0, eps_p=2.0)


def test_unknown_cavity_key_rejected():
    """Test that a misspelled key is an error rather than silently ignored."""
    with pytest.raises(ValidationError):
        CavityConfig.model_validate(
            {"kappa_mhz": 1.5, "chi_a_mhz": 3.0, "chi_b_mhz": 3.0, "n_ss": 2.5, "kapa_mhz": 1.0}
        )


def test_resonant_steady_state_photons():
    """Test that n_ss photons are reached at resonance."""
    cfg = CavityConfig(kappa_mhz=1.5, chi_a_mhz=0.0, chi_b_mhz=0.0, n_ss=2.5)

    photons = np.abs(cfg.steady_amplitudes()) ** 2

    np.testing.assert_allclose(photons, 2.5)
    assert cfg.drive == pytest.approx(0.5 * cfg.kappa * np.sqrt(2.5))


def test_detunings_are_centered(parity_cavity):
    assert parity_cavity.detunings().mean() == pytest.approx(0.0, abs=1e-9)


def test_long_pulse_reaches_steady_state(parity_cavity):
    traj = evolve_pointer(parity_cavity, 10.0)

    np.testing.assert_allclose(
        traj.alpha[:, traj.pulse_end], parity_cavity.steady_amplitudes(), rtol=1e-6
    )
    assert traj.amplitude("11")[traj.pulse_end] == pytest.approx(
        parity_cavity.steady_amplitudes()[3], rel=1e-6
    )


def test_ring_down_reaches_floor(parity_cavity):
    traj = evolve_pointer(parity_cavity, 0.4)

    assert np.max(np.abs(traj.alpha[:, -1])) <= RING_DOWN_FLOOR * (1 + 1e-9)
    assert traj.times[traj.pulse_end] == pytest.approx(0.4)


def test_amplitude_envelope(parity_cavity):
    """Test |alpha| <= 2 eps_p / kappa along the whole trajectory."""
    traj = evolve_pointer(parity_cavity, 0.4)
    bound = 2.0 * parity_cavity.drive / parity_cavity.kappa

    assert np.abs(traj.alpha).max() <= bound * (1 + 1e-9)


def test_evolve_pointer_validation(parity_cavity):
    with pytest.raises(ValueError):
        evolve_pointer(parity_cavity, 0.0)
    with pytest.raises(ValueError, match="dt"):
        evolve_pointer(parity_cavity, 0.4, dt=1.0)


def test_signal_stats_window(parity_cavity):
    """Test the integrated-noise variance and window validation."""
    traj = evolve_pointer(parity_cavity, 0.4)

    stats = signal_stats(traj, parity_cavity, (0.0, 0.4))

    assert stats.var == pytest.approx(0.2)
    assert stats.means.shape == (4,)
    with pytest.raises(ValueError):
        signal_stats(traj, parity_cavity, (0.2, 100.0))


def test_odd_states_share_a_pointer(parity_cavity):
    """Test that the odd means nearly coincide while the parities separate."""
    traj = evolve_pointer(parity_cavity, 0.4)
    stats = signal_stats(traj, parity_cavity, (0.0, 0.4))

    assert abs(stats.means[1] - stats.means[2]) < 0.1 * stats.parity_separation()
    assert stats.snr(0, 1) > stats.snr(1, 2)


def test_jpa_low_pass_smooths_the_signal(parity_cavity):
    traj = evolve_pointer(parity_cavity, 0.4)
    filtered = parity_cavity.model_copy(update={"jpa_bandwidth_mhz": 4.0})

    raw = detected_signal(traj, parity_cavity)
    smooth = detected_signal(traj, filtered)

    assert np.abs(smooth).max() <= np.abs(raw).max() * (1 + 1e-9)
    assert not np.allclose(smooth, raw)


def test_beta_coefficients():
    """Test the Walsh-Hadamard inversion on a pure Z_B Z_A meter."""
    beta = beta_from_means([1.0, -1.0, -1.0, 1.0])

    assert beta.bBA == pytest.approx(1.0)
    assert beta.is_parity_meter()
    assert not BetaCoefficients(0.0, 0.5, 0.0, 1.0).is_parity_meter()
    np.testing.assert_allclose(beta_from_means(beta.means()).means(), beta.means())
    with pytest.raises(ValueError):
        beta_from_means([1.0, 2.0])


def test_coherence_factor_validation(parity_cavity):
    traj = evolve_pointer(parity_cavity, 0.4)
    with pytest.raises(ValueError, match="tau_p"):
        coherence_factors(traj, parity_cavity, 0.3)

    truncated = evolve_pointer(parity_cavity, 0.4, ring_down=False)
    with pytest.raises(ValueError, match="ring-down"):
        coherence_factors(truncated, parity_cavity, 0.4)


def test_growing_coherence_is_logged_and_clamped(parity_cavity, caplog):
    """Test that an unphysical positive decay exponent warns and leaves decay at 1."""
    times = np.linspace(0.0, 1.0, 11)
    alpha = np.zeros((4, 11), dtype=complex)
    alpha[0, :-1] = 1.0
    alpha[1, :-1] = -1j
    traj = PointerTrajectory(times=times, alpha=alpha, tau_p=1.0, pulse_end=10)

    with caplog.at_level(logging.WARNING, logger="qfb.parity.cavity"):
        factors = coherence_factors(traj, parity_cavity, 1.0)

    assert factors[(0, 1)].decay == 1.0
    assert "clamped" in caplog.text


def test_cross_parity_coherences_suppressed(parity_cavity):
    """Test that a 400 ns pulse keeps the same-parity coherences of psi0 only."""
    traj = evolve_pointer(parity_cavity, 0.4)
    factors = coherence_factors(traj, parity_cavity, 0.4)
    rho = unconditioned_parity_map(psi0(), factors)

    cross = [rho.coherence(i, j) for i, j in ((0, 1), (0, 2), (1, 3), (2, 3))]
    assert max(cross) < 0.03
    assert rho.coherence(1, 2) > 0.15
    assert rho.coherence(0, 3) > 0.15
    assert factors[(2, 3)].decay < 0.1
    assert max(f.decay for f in factors.values()) <= 1.0


def test_cross_pairs_dephase_fastest(parity_cavity):
    traj = evolve_pointer(parity_cavity, 0.4)
    factors = coherence_factors(traj, parity_cavity, 0.4)
    same = min(factors[(1, 2)].decay, factors[(0, 3)].decay)

    for pair in ((0, 1), (0, 2), (1, 3), (2, 3)):
        assert factors[pair].decay <= same


def test_stark_phase_scales_with_photon_number(parity_cavity):
    """Test that accumulated phases scale with the drive power."""

    def phase(n_ss: float) -> float:
        cfg = parity_cavity.model_copy(update={"n_ss": n_ss})
        traj = evolve_pointer(cfg, 0.4)
        return coherence_factors(traj, cfg, 0.4)[(0, 1)].phase

    assert phase(0.4) == pytest.approx(4.0 * phase(0.1), rel=0.02)


def test_identity_factors_leave_state_unchanged():
    rho = unconditioned_parity_map(psi0(), identity_factors())

    np.testing.assert_allclose(rho.matrix, psi0().matrix)
