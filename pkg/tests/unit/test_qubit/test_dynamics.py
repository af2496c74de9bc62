"""
Tests for the three-level rate model.

These tests verify:
- Generator structure and exact propagation
- Steady state and its failure mode
- Boltzmann temperature fits
- Agreement with a reference matrix exponential and the simplex invariant
- Pi pulses and rotations on populations
- Per-shot sampling helpers
"""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy import constants
from scipy.linalg import expm

from qfb.qubit.dynamics import (
    LevelPopulations,
    NoPositiveTemperatureError,
    NoSteadyStateError,
    QubitFrequencies,
    Transition,
    TransitionRates,
    apply_pi_pulse,
    effective_temperature,
    evolve,
    flip_levels,
    propagator,
    propagators,
    relaxation_trace,
    rotate,
    rotate_levels,
    sample_evolution,
    sample_levels,
    steady_state,
)


@pytest.fixture
def rates() -> TransitionRates:
    """Inverse rates 324, 50, 111, 20 us for 0->1, 1->0, 1->2, 2->1."""
    return TransitionRates.from_lifetimes(324.0, 50.0, 111.0, 20.0)


def test_populations_must_sum_to_one():
    """Test that unnormalized populations are rejected."""
    with pytest.raises(ValidationError):
        LevelPopulations(p0=0.5, p1=0.2, p2=0.2)


def test_populations_from_array_clips_round_off():
    """Test that tiny negative entries are clipped and the vector renormalized."""
    pops = LevelPopulations.from_array(np.array([1.0, -1e-15, 0.0]))

    assert pops.p0 == 1.0
    assert pops.p1 == 0.0


def test_populations_from_levels():
    """Test empirical populations of a level sample."""
    pops = LevelPopulations.from_levels(np.array([0, 0, 1, 2]))

    assert pops.p0 == pytest.approx(0.5)
    assert pops.p1 == pytest.approx(0.25)
    assert pops.excitation == pytest.approx(0.5)


def test_generator_columns_sum_to_zero(rates):
    """Test that the generator conserves probability."""
    g = rates.generator()

    assert np.allclose(g.sum(axis=0), 0.0)
    assert g[2, 0] == 0.0 and g[0, 2] == 0.0


def test_from_lifetimes_inf_switches_off():
    """Test that an infinite inverse rate gives a zero rate."""
    rates = TransitionRates.from_lifetimes(t10=25.0)

    assert rates.g10 == pytest.approx(0.04)
    assert rates.g01 == 0.0
    assert rates.g21 == 0.0


def test_from_lifetimes_rejects_non_positive():
    """Test that a zero inverse rate is an error."""
    with pytest.raises(ValueError):
        TransitionRates.from_lifetimes(t10=0.0)


def test_propagator_is_stochastic(rates):
    """Test that propagator columns are probability distributions."""
    p = propagator(rates, 7.5)

    assert np.all(p >= -1e-12)
    assert np.allclose(p.sum(axis=0), 1.0)


def test_propagator_semigroup(rates):
    """Test exp(G a) exp(G b) = exp(G (a + b))."""
    assert np.allclose(propagator(rates, 3.0) @ propagator(rates, 4.0), propagator(rates, 7.0))


def test_propagator_zero_time_is_identity(rates):
    """Test the dt = 0 shortcut."""
    assert np.array_equal(propagator(rates, 0.0), np.eye(3))


def test_propagator_rejects_negative_time(rates):
    """Test that negative durations are rejected."""
    with pytest.raises(ValueError):
        propagator(rates, -1.0)


def test_propagator_degenerate_rates_use_expm_fallback():
    """Test pure decay (degenerate eigenvalues) against the closed form."""
    rates = TransitionRates.from_lifetimes(t10=25.0)
    p = propagator(rates, 10.0)

    assert p[1, 1] == pytest.approx(math.exp(-10.0 / 25.0))
    assert p[0, 1] == pytest.approx(1.0 - math.exp(-10.0 / 25.0))
    assert p[2, 2] == pytest.approx(1.0)


def test_propagators_match_single(rates):
    """Test that the stacked form agrees with one-at-a-time propagation."""
    dts = np.array([0.0, 0.5, 12.0, 400.0])
    stack = propagators(rates, dts)

    for k, dt in enumerate(dts):
        assert np.allclose(stack[k], propagator(rates, float(dt)))


def test_steady_state_reference_values(rates):
    """Test P1 = 13.1 % and P2 = 2.4 % for the reference rates."""
    pops = steady_state(rates)

    assert pops.p1 == pytest.approx(0.131, abs=0.003)
    assert pops.p2 == pytest.approx(0.024, abs=0.002)


def test_steady_state_is_detailed_balance(rates):
    """Test P1/P0 = g01/g10 and P2/P1 = g12/g21 for the chain model."""
    pops = steady_state(rates)

    assert pops.p1 / pops.p0 == pytest.approx(rates.g01 / rates.g10)
    assert pops.p2 / pops.p1 == pytest.approx(rates.g12 / rates.g21)


def test_steady_state_is_long_time_limit(rates):
    """Test that evolution for a long time converges to the steady state."""
    late = evolve(LevelPopulations.pure(2), rates, 5000.0)

    assert np.allclose(late.as_array(), steady_state(rates).as_array(), atol=1e-9)


def test_steady_state_without_rates_fails():
    """Test that a zero generator has no unique steady state."""
    with pytest.raises(NoSteadyStateError):
        steady_state(TransitionRates())


def test_effective_temperature_two_levels(rates):
    """Test the two-level Boltzmann formula."""
    pops = steady_state(rates)
    freqs = QubitFrequencies(f01=6.55, anharmonicity=0.33)
    fit = effective_temperature(pops, freqs, levels=2)

    expected = constants.h * 6.55e9 / (constants.k * math.log(pops.p0 / pops.p1))
    assert fit.levels_used == 2
    assert fit.temperature_mk == pytest.approx(expected * 1e3, rel=1e-9)


def test_effective_temperature_ground_state_is_zero():
    """Test that a pure ground state reports zero temperature."""
    fit = effective_temperature(LevelPopulations.pure(0), QubitFrequencies(f01=5.0))

    assert fit.temperature_mk == 0.0
    assert fit.degenerate


def test_effective_temperature_inverted_populations():
    """Test that inverted populations have no positive temperature."""
    pops = LevelPopulations(p0=0.3, p1=0.7)

    with pytest.raises(NoPositiveTemperatureError):
        effective_temperature(pops, QubitFrequencies(f01=5.0))


def test_frequencies_fill_f12():
    """Test f12 = f01 - anharmonicity when omitted."""
    freqs = QubitFrequencies(f01=6.0, anharmonicity=0.3)

    assert freqs.f12 == pytest.approx(5.7)


def test_pi_pulse_swaps_populations():
    """Test an ideal pi pulse on 0-1 and 1-2."""
    pops = LevelPopulations(p0=0.7, p1=0.2, p2=0.1)

    ge = apply_pi_pulse(pops, Transition.GE)
    ef = apply_pi_pulse(pops, Transition.EF)

    assert ge.as_array() == pytest.approx([0.2, 0.7, 0.1])
    assert ef.as_array() == pytest.approx([0.7, 0.1, 0.2])


def test_rotate_partial_transfer():
    """Test that a pi/2 rotation of |0> gives equal populations."""
    pops = rotate(LevelPopulations.pure(0), math.pi / 2)

    assert pops.p0 == pytest.approx(0.5)
    assert pops.p1 == pytest.approx(0.5)


def test_rotate_with_pulse_error():
    """Test that a failed fraction stays behind."""
    pops = rotate(LevelPopulations.pure(0), math.pi, pulse_error=0.01)

    assert pops.p0 == pytest.approx(0.01)


def test_relaxation_trace_starts_at_initial(rates):
    """Test the first row of a relaxation trace."""
    trace = relaxation_trace(LevelPopulations.pure(1), rates, np.array([0.0, 10.0, 100.0]))

    assert trace.shape == (3, 3)
    assert trace[0] == pytest.approx([0.0, 1.0, 0.0])
    assert np.allclose(trace.sum(axis=1), 1.0)


def test_sample_levels_statistics(rates):
    """Test that sampled levels follow the distribution."""
    rng = np.random.default_rng(1)
    pops = steady_state(rates)
    levels = sample_levels(pops, 200_000, rng)

    assert np.mean(levels == 1) == pytest.approx(pops.p1, abs=0.004)


def test_sample_evolution_matches_propagator(rates):
    """Test that sampled evolution reproduces exp(G dt)."""
    rng = np.random.default_rng(2)
    levels = np.ones(200_000, dtype=np.int64)
    after = sample_evolution(levels, rates, 20.0, rng)
    expected = propagator(rates, 20.0)[:, 1]

    for level in range(3):
        assert np.mean(after == level) == pytest.approx(expected[level], abs=0.004)


def test_sample_evolution_per_shot_durations(rates):
    """Test that zero per-shot durations leave levels untouched."""
    rng = np.random.default_rng(3)
    levels = np.array([0, 1, 2, 1])
    after = sample_evolution(levels, rates, np.zeros(4), rng)

    assert np.array_equal(after, levels)


def test_flip_levels_only_selected():
    """Test that flips apply to selected shots and addressed levels only."""
    rng = np.random.default_rng(4)
    levels = np.array([0, 1, 2, 1])
    where = np.array([True, True, True, False])
    flipped = flip_levels(levels, Transition.GE, 0.0, rng, where=where)

    assert flipped.tolist() == [1, 0, 2, 1]


def test_rotate_levels_pi_flips_everything():
    """Test that an error-free pi rotation flips every addressed shot."""
    rng = np.random.default_rng(5)
    levels = np.array([0, 0, 1, 2])

    assert rotate_levels(levels, math.pi, Transition.GE, 0.0, rng).tolist() == [1, 1, 0, 2]


def test_propagator_matches_reference_expm(rates):
    """Test exact propagation from |1> over 50 us against scipy's expm."""
    after = evolve(LevelPopulations.pure(1), rates, 50.0)
    reference = expm(rates.generator() * 50.0) @ np.array([0.0, 1.0, 0.0])

    np.testing.assert_allclose(after.as_array(), reference, atol=1e-6)


def random_rates(rng: np.random.Generator) -> TransitionRates:
    g01, g10, g12, g21 = rng.uniform(1e-3, 0.1, 4)
    return TransitionRates(g01=g01, g10=g10, g12=g12, g21=g21)


def test_random_rates_keep_populations_on_simplex():
    """Test that propagation keeps populations non-negative and normalized."""
    rng = np.random.default_rng(11)

    for _ in range(1000):
        rates = random_rates(rng)
        start = rng.dirichlet(np.ones(3))
        after = propagator(rates, float(rng.uniform(0.0, 500.0))) @ start

        assert np.all(after >= -1e-9)
        assert after.sum() == pytest.approx(1.0, abs=1e-9)


def test_random_rates_long_evolution_reaches_steady_state():
    """Test that evolving for 1e6 us lands on the kernel vector of G."""
    rng = np.random.default_rng(12)

    for _ in range(20):
        rates = random_rates(rng)
        late = evolve(LevelPopulations.pure(2), rates, 1e6)

        np.testing.assert_allclose(late.as_array(), steady_state(rates).as_array(), atol=1e-6)


@pytest.mark.parametrize("t21", [20.0, 50.0])
def test_excited_population_relaxes_monotonically(rates, t21):
    """Test that P1 from |1> never rises and ends at the steady state."""
    rates = rates.model_copy(update={"g21": 1.0 / t21})
    times = np.linspace(0.0, 2000.0, 401)
    trace = relaxation_trace(LevelPopulations.pure(1), rates, times)

    assert np.all(np.diff(trace[:, 1]) <= 1e-12)
    np.testing.assert_allclose(trace[-1], steady_state(rates).as_array(), atol=1e-6)


def test_effective_temperature_three_levels():
    """Test a three-level fit of measured populations at f01 = 5.606 GHz."""
    pops = LevelPopulations(p0=0.846, p1=0.131, p2=0.023)
    fit = effective_temperature(pops, QubitFrequencies(f01=5.606))

    assert fit.levels_used == 3
    assert not fit.degenerate
    assert 110.0 <= fit.temperature_mk <= 150.0


def test_frequencies_reject_unknown_keys():
    """Test that a misspelled frequency key is an error."""
    with pytest.raises(ValidationError):
        QubitFrequencies.model_validate({"f01": 5.6, "anharmonicty": 0.3})
