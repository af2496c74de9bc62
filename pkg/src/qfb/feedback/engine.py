"""
Digital feedback loops on a three-level transmon.

Each round measures the qubit (single-jump readout model), digitizes the
voltage, lets the rate model act for tau_fb and then applies a pi pulse on
0<->1 when the result disagrees with the target: Fb0 pulses on L, Fb1 on H.
The analytic error budget of one round is

    P_err(0)  = p^L_00 + p^H_01 + G01 tau_fb
    P_err(pi) = p^H_11 + p^L_10 + p12 + (G10 + G12) tau_fb

weighted by cos^2(theta/2) and sin^2(theta/2) for a theta-rotated initial
state. A second round leaves only the leakage to |2> on top of P_err(0).
"""

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import NDArray

from ..qubit.dynamics import (
    LevelPopulations,
    Transition,
    TransitionRates,
    flip_levels,
    sample_evolution,
    sample_levels,
    steady_state,
)
from ..qubit.readout import Outcome, ReadoutErrorModel, ShotModel, digitize_many, generate_shots
from .timing import FeedbackProtocol, LoopTiming

logger = logging.getLogger(__name__)

Algorithm = Literal["leave-1", "leave-0"]


def theta_state(theta: float) -> LevelPopulations:
    """Populations after rotating |0> by theta on 0<->1."""
    c = math.cos(theta / 2.0) ** 2
    return LevelPopulations.from_array(np.array([c, 1.0 - c, 0.0]))


def predict_reset_error(
    theta: float,
    rates: TransitionRates,
    err: ReadoutErrorModel,
    timing: LoopTiming,
    rounds: int = 1,
    recover_12: bool = False,
) -> float:
    """
    First-order error budget of reset by feedback.

    Args:
        theta: Rotation angle of the initial state, in [0, pi]
        rates: Transition rates of the rate model
        err: Readout statistics p^M_ij
        timing: Loop timing; only tau_fb enters
        rounds: Number of back-to-back rounds
        recover_12: With two or more rounds, a 1<->2 pulse before the last one
            returns the leaked population and the floor drops to P_err(0)

    Returns:
        Probability that the qubit is not in |0> after the protocol
    """
    if not 0.0 <= theta <= math.pi:
        raise ValueError(f"theta must be in [0, pi], got {theta}")
    if rounds < 1:
        raise ValueError(f"rounds must be >= 1, got {rounds}")

    tau = timing.tau_fb
    err_zero = err.get(Outcome.L, 0, 0) + err.get(Outcome.H, 0, 1) + rates.g01 * tau
    err_pi = (
        err.get(Outcome.H, 1, 1)
        + err.get(Outcome.L, 1, 0)
        + err.p12
        + (rates.g10 + rates.g12) * tau
    )
    if rounds >= 2:
        err_pi = err_zero if recover_12 else err_zero + err.p12 + rates.g12 * tau

    weight = math.sin(theta / 2.0) ** 2
    return (1.0 - weight) * err_zero + weight * err_pi


@dataclass
class ResetResult:
    """Monte-Carlo outcome of a reset run."""

    target: int
    n_shots: int
    final_counts: NDArray[np.int64]
    outcomes_high: NDArray[np.bool_] = field(repr=False)
    pulses: NDArray[np.bool_] = field(repr=False)

    @property
    def p_target(self) -> float:
        return float(self.final_counts[self.target] / self.n_shots)

    @property
    def p_err(self) -> float:
        return 1.0 - self.p_target

    @property
    def stderr(self) -> float:
        p = self.p_err
        return math.sqrt(max(p * (1.0 - p), 0.0) / self.n_shots)

    @property
    def rounds(self) -> int:
        return int(self.outcomes_high.shape[0])

    @classmethod
    def merge(cls, results: Sequence["ResetResult"]) -> "ResetResult":
        """Combine batch results; counts add, traces concatenate in order."""
        if not results:
            raise ValueError("nothing to merge")
        return cls(
            target=results[0].target,
            n_shots=sum(r.n_shots for r in results),
            final_counts=np.sum([r.final_counts for r in results], axis=0),
            outcomes_high=np.concatenate([r.outcomes_high for r in results], axis=1),
            pulses=np.concatenate([r.pulses for r in results], axis=1),
        )


def _tau_fb(timing: LoopTiming, n: int, rng: np.random.Generator) -> float | NDArray[np.float64]:
    if timing.jitter == 0:
        return timing.tau_fb
    return np.clip(rng.normal(timing.tau_fb, timing.jitter, size=n), 0.0, None)


def feedback_round(
    levels: NDArray[np.int64],
    protocol: FeedbackProtocol,
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
) -> tuple[NDArray[np.int64], NDArray[np.bool_], NDArray[np.bool_]]:
    """
    One measure-wait-pulse round on sampled levels.

    Returns:
        (levels after the round, H results, conditional pulse fired)
    """
    shots = generate_shots(levels, model, rates, rng)
    high = digitize_many(shots.voltages, protocol.threshold)
    tau = _tau_fb(protocol.timing, levels.size, rng)
    after_wait = sample_evolution(shots.post_levels, rates, tau, rng)
    fire = ~high if protocol.target == 0 else high
    final = flip_levels(after_wait, Transition.GE, protocol.pulse_error, rng, where=fire)
    return final, high, fire


def apply_protocols(
    levels: NDArray[np.int64],
    protocols: Sequence[FeedbackProtocol],
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
) -> tuple[NDArray[np.int64], list[NDArray[np.bool_]], list[NDArray[np.bool_]]]:
    """Run protocols back to back, including their 1<->2 recovery pulses."""
    outcomes: list[NDArray[np.bool_]] = []
    pulses: list[NDArray[np.bool_]] = []
    for protocol in protocols:
        for round_index in range(protocol.rounds):
            if protocol.recover_12 and round_index == protocol.rounds - 1:
                levels = flip_levels(levels, Transition.EF, protocol.pulse_error, rng)
            levels, high, fire = feedback_round(levels, protocol, model, rates, rng)
            outcomes.append(high)
            pulses.append(fire)
    return levels, outcomes, pulses


def _as_sequence(
    protocol: FeedbackProtocol | Sequence[FeedbackProtocol] | None,
) -> list[FeedbackProtocol]:
    if protocol is None:
        return []
    if isinstance(protocol, FeedbackProtocol):
        return [protocol]
    return list(protocol)


def run_reset(
    initial: LevelPopulations | float,
    protocol: FeedbackProtocol | Sequence[FeedbackProtocol],
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
    n_shots: int,
) -> ResetResult:
    """
    Monte-Carlo reset of n_shots qubits.

    Args:
        initial: Initial populations, or a rotation angle theta applied to |0>
        protocol: One protocol or a sequence run back to back; the target of
            the last one defines success
        model: Readout model used for every measurement
        rates: Transition rates
        rng: Random generator
        n_shots: Number of shots

    Returns:
        ResetResult with final level counts and per-round traces
    """
    if n_shots < 1:
        raise ValueError(f"n_shots must be >= 1, got {n_shots}")
    protocols = _as_sequence(protocol)
    if not protocols:
        raise ValueError("at least one feedback protocol is required")

    pops = theta_state(initial) if isinstance(initial, float | int) else initial
    levels = sample_levels(pops, n_shots, rng)
    levels, outcomes, pulses = apply_protocols(levels, protocols, model, rates, rng)

    return ResetResult(
        target=protocols[-1].target,
        n_shots=n_shots,
        final_counts=np.bincount(levels, minlength=3)[:3].astype(np.int64),
        outcomes_high=np.array(outcomes, dtype=bool).reshape(len(outcomes), n_shots),
        pulses=np.array(pulses, dtype=bool).reshape(len(pulses), n_shots),
    )


def passive_populations(
    initial: LevelPopulations | float, n_shots: int, rng: np.random.Generator
) -> ResetResult:
    """Reference run without feedback: the initial state itself, scored against |0>."""
    pops = theta_state(initial) if isinstance(initial, float | int) else initial
    levels = sample_levels(pops, n_shots, rng)
    return ResetResult(
        target=0,
        n_shots=n_shots,
        final_counts=np.bincount(levels, minlength=3)[:3].astype(np.int64),
        outcomes_high=np.zeros((0, n_shots), dtype=bool),
        pulses=np.zeros((0, n_shots), dtype=bool),
    )


@dataclass(frozen=True)
class RepeatedInitResult:
    """Initialization error of a looped experiment."""

    p_err: float
    stderr: float
    n_samples: int

    @classmethod
    def merge(cls, results: Sequence["RepeatedInitResult"]) -> "RepeatedInitResult":
        """Pool independent chains, weighting each by its sample count."""
        if not results:
            raise ValueError("nothing to merge")
        n_samples = sum(r.n_samples for r in results)
        p_err = sum(r.p_err * r.n_samples for r in results) / n_samples
        return cls(
            p_err=p_err,
            stderr=math.sqrt(max(p_err * (1 - p_err), 0.0) / n_samples),
            n_samples=n_samples,
        )


def run_repeated_init(
    tau_init: float,
    algorithm: Algorithm,
    protocol: FeedbackProtocol | Sequence[FeedbackProtocol] | None,
    rates: TransitionRates,
    model: ShotModel,
    rng: np.random.Generator,
    n_cycles: int,
    n_chains: int = 1,
    burn_in: int = 20,
    pulse_error: float = 0.005,
) -> RepeatedInitResult:
    """
    Loop an experiment that should leave the qubit in |1> or |0>.

    Each cycle: measurement (also quantifying the initialization of the
    previous cycle), a pi pulse for "leave-1", a wait tau_init, then the
    initialization protocol (if any). The error of a cycle is the fraction of
    its quantifying measurements that read L. Chains start in the steady
    state and the first `burn_in` cycles are discarded.

    Args:
        tau_init: Wait between the algorithm and the next initialization, us
        algorithm: "leave-1" (measurement and pi pulse) or "leave-0" (measurement only)
        protocol: Initialization protocol(s), or None for passive initialization
        rates: Transition rates
        model: Readout model for every measurement
        rng: Random generator
        n_cycles: Recorded cycles per chain (>= 100)
        n_chains: Independent chains simulated side by side
        burn_in: Unrecorded cycles at the start of each chain
        pulse_error: Error of the algorithm's pi pulse

    Returns:
        RepeatedInitResult averaged over chains and recorded cycles
    """
    if n_cycles < 100:
        raise ValueError(f"n_cycles must be >= 100, got {n_cycles}")
    if tau_init < 0:
        raise ValueError(f"tau_init must be non-negative, got {tau_init}")
    if algorithm not in ("leave-1", "leave-0"):
        raise ValueError(f"unknown algorithm '{algorithm}'")

    protocols = _as_sequence(protocol)
    ground_side = protocols[0].threshold if protocols else model.midpoint()

    levels = sample_levels(steady_state(rates), n_chains, rng)
    low_counts = 0
    for cycle in range(burn_in + n_cycles):
        shots = generate_shots(levels, model, rates, rng)
        if cycle >= burn_in:
            low_counts += int((~digitize_many(shots.voltages, ground_side)).sum())
        levels = shots.post_levels
        if algorithm == "leave-1":
            levels = flip_levels(levels, Transition.GE, pulse_error, rng)
        levels = sample_evolution(levels, rates, tau_init, rng)
        levels, _, _ = apply_protocols(levels, protocols, model, rates, rng)

    n_samples = n_chains * n_cycles
    p_err = low_counts / n_samples
    logger.debug(
        "Repeated init tau=%.3f %s: P_err=%.4f over %s samples",
        tau_init,
        algorithm,
        p_err,
        n_samples,
    )
    return RepeatedInitResult(
        p_err=p_err,
        stderr=math.sqrt(max(p_err * (1 - p_err), 0.0) / n_samples),
        n_samples=n_samples,
    )
