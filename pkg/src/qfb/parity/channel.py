"""
Parity measurement channel and entanglement by measurement.

The unconditioned channel multiplies every coherence rho_ij by the cavity
factor D_ij exp(i phi_ij). A single shot is a Gaussian-meter update: the
voltage is drawn from sum_s rho_ss N(mean_s, var), populations follow Bayes'
rule and coherences pick up sqrt(L_i L_j) together with the part of the
cavity dephasing not already explained by the measurement record,
D_ij / B_ij with B_ij = exp(-(mean_i - mean_j)^2 / (8 var)). Averaged over
outcomes this reproduces the unconditioned channel.

M_P = -1 reports odd parity, M_P = +1 even; a voltage on the threshold is even.
"""

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, field_validator
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from ..qubit.readout import EmptySelectionError
from .cavity import CoherenceFactor, SignalStats
from .metrics import EntanglementMetrics
from .states import EVEN_STATES, ODD_STATES, PHI_PLUS, TwoQubitDensityMatrix

logger = logging.getLogger(__name__)

ODD: Literal[-1] = -1
EVEN: Literal[1] = 1
_NEGATIVITY_TOLERANCE = 1e-10


class MissingCoherencePairError(ValueError):
    """Raised when a coherence-factor map lacks a pair of basis states."""


class ParityThreshold(BaseModel):
    """Voltage threshold of the parity outcome and the side read as odd."""

    model_config = ConfigDict(frozen=True)

    v_th: float
    odd_high: bool = True

    @field_validator("v_th")
    @classmethod
    def check_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"threshold must be finite, got {v}")
        return v

    def outcome(self, v: NDArray[np.float64]) -> NDArray[np.int8]:
        """M_P for each voltage."""
        v = np.asarray(v, dtype=float)
        odd = v > self.v_th if self.odd_high else v < self.v_th
        return np.where(odd, ODD, EVEN).astype(np.int8)

    def shifted(self, offset: float) -> "ParityThreshold":
        """Threshold moved by offset towards the odd side (stricter odd selection)."""
        step = offset if self.odd_high else -offset
        return self.model_copy(update={"v_th": self.v_th + step})


def factor_matrix(factors: Mapping[tuple[int, int], CoherenceFactor]) -> NDArray[np.complex128]:
    """Hermitian 4x4 matrix of coherence multipliers, ones on the diagonal."""
    m = np.eye(4, dtype=complex)
    for i in range(4):
        for j in range(i + 1, 4):
            factor = factors.get((i, j))
            if factor is None:
                raise MissingCoherencePairError(f"no coherence factor for pair ({i}, {j})")
            m[i, j] = factor.multiplier
            m[j, i] = np.conj(factor.multiplier)
    return m


def unconditioned_parity_map(
    rho: TwoQubitDensityMatrix,
    factors: Mapping[tuple[int, int], CoherenceFactor],
) -> TwoQubitDensityMatrix:
    """
    Apply the measurement channel averaged over outcomes.

    Raises:
        MissingCoherencePairError: If a pair i < j has no factor
    """
    return TwoQubitDensityMatrix.normalized(rho.matrix * factor_matrix(factors))


def overlap_matrix(stats: SignalStats) -> NDArray[np.float64]:
    """Bhattacharyya overlaps of the four voltage distributions."""
    diff = stats.means[:, None] - stats.means[None, :]
    return np.exp(-(diff**2) / (8.0 * stats.var))


def residual_factors(
    stats: SignalStats,
    factors: Mapping[tuple[int, int], CoherenceFactor],
) -> NDArray[np.complex128]:
    """Coherence multipliers left after the record's own back-action, magnitude capped at 1."""
    full = factor_matrix(factors)
    overlap = overlap_matrix(stats)
    ratio = np.divide(np.abs(full), overlap, out=np.ones((4, 4)), where=overlap > 0)
    if np.any(ratio > 1.0 + 1e-9):
        logger.debug("Signal overlap below dephasing for some pairs; residual capped at 1")
    return np.minimum(ratio, 1.0) * np.exp(1j * np.angle(full))


@dataclass(frozen=True, eq=False)
class ParityShot:
    """One parity measurement: integrated voltage, outcome and post-measurement state."""

    v_int: float
    m_p: int
    rho_post: TwoQubitDensityMatrix


@dataclass(frozen=True, eq=False)
class ParityShotBatch:
    """Vectorized parity shots; rho_post has shape (n, 4, 4)."""

    v_int: NDArray[np.float64]
    m_p: NDArray[np.int8]
    rho_post: NDArray[np.complex128]

    def __len__(self) -> int:
        return int(self.v_int.size)

    def shot(self, index: int) -> ParityShot:
        return ParityShot(
            v_int=float(self.v_int[index]),
            m_p=int(self.m_p[index]),
            rho_post=TwoQubitDensityMatrix.normalized(self.rho_post[index]),
        )

    def fraction(self, outcome: int) -> float:
        return float(np.mean(self.m_p == outcome))

    def average(self, mask: NDArray[np.bool_] | None = None) -> TwoQubitDensityMatrix:
        """Mean post-measurement state of all (or the masked) shots."""
        selected = self.rho_post if mask is None else self.rho_post[np.asarray(mask)]
        if selected.shape[0] == 0:
            raise EmptySelectionError("no shots selected")
        return TwoQubitDensityMatrix.normalized(selected.mean(axis=0))

    def rethreshold(self, threshold: ParityThreshold) -> "ParityShotBatch":
        return ParityShotBatch(self.v_int, threshold.outcome(self.v_int), self.rho_post)

    def apply_kraus(self, kraus: Sequence[NDArray[np.complex128]]) -> "ParityShotBatch":
        """Apply the same channel sum_k K rho K^dagger to every post-measurement state."""
        post = sum(
            (np.einsum("ij,njk,lk->nil", k, self.rho_post, k.conj()) for k in kraus),
            np.zeros_like(self.rho_post),
        )
        return ParityShotBatch(self.v_int, self.m_p, post)

    def transform(self, unitary: NDArray[np.complex128]) -> "ParityShotBatch":
        return self.apply_kraus([unitary])

    @classmethod
    def merge(cls, batches: Sequence["ParityShotBatch"]) -> "ParityShotBatch":
        return cls(
            v_int=np.concatenate([b.v_int for b in batches]),
            m_p=np.concatenate([b.m_p for b in batches]),
            rho_post=np.concatenate([b.rho_post for b in batches]),
        )


def _clip_negative(states: NDArray[np.complex128]) -> NDArray[np.complex128]:
    """Project states with round-off negative eigenvalues back onto the PSD cone."""
    values, vectors = np.linalg.eigh(states)
    bad = values.min(axis=1) < -_NEGATIVITY_TOLERANCE
    if not np.any(bad):
        return states
    logger.debug("Clipping negative eigenvalues of %s post-measurement states", int(bad.sum()))
    clipped = np.clip(values[bad], 0.0, None)
    clipped /= clipped.sum(axis=1, keepdims=True)
    fixed = np.einsum("nij,nj,nkj->nik", vectors[bad], clipped, vectors[bad].conj())
    out = states.copy()
    out[bad] = fixed
    return out


def conditioned_parity_shots(
    rho: TwoQubitDensityMatrix,
    stats: SignalStats,
    factors: Mapping[tuple[int, int], CoherenceFactor],
    threshold: ParityThreshold,
    rng: np.random.Generator,
    n: int,
) -> ParityShotBatch:
    """
    Sample n parity measurements of rho with their post-measurement states.

    Args:
        rho: Input state
        stats: Voltage statistics of the four basis states
        factors: Coherence factors of the same pulse
        threshold: Digitization of the voltage into M_P
        rng: Random generator
        n: Number of shots
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    pops = np.clip(rho.populations(), 0.0, None)
    states = rng.choice(4, size=n, p=pops / pops.sum())
    v = stats.means[states] + rng.normal(0.0, stats.sigma, size=n)

    log_l = -((v[:, None] - stats.means[None, :]) ** 2) / (2.0 * stats.var)
    log_l -= log_l.max(axis=1, keepdims=True)
    root = np.exp(0.5 * log_l)

    post = rho.matrix[None, :, :] * residual_factors(stats, factors)[None, :, :]
    post = post * root[:, :, None] * root[:, None, :]
    post /= np.real(np.trace(post, axis1=1, axis2=2))[:, None, None]
    post = _clip_negative(0.5 * (post + post.conj().transpose(0, 2, 1)))

    return ParityShotBatch(v_int=v, m_p=threshold.outcome(v), rho_post=post)


def conditioned_parity_shot(
    rho: TwoQubitDensityMatrix,
    stats: SignalStats,
    factors: Mapping[tuple[int, int], CoherenceFactor],
    threshold: ParityThreshold,
    rng: np.random.Generator,
) -> ParityShot:
    """Single-shot form of conditioned_parity_shots."""
    return conditioned_parity_shots(rho, stats, factors, threshold, rng, 1).shot(0)


def parity_fidelity(stats: SignalStats, threshold: ParityThreshold) -> float:
    """
    F_p = 1 - eps_e - eps_o from Gaussian tails.

    eps_e is the probability that an even state (averaged over |00>, |11>)
    lands on the odd side of the threshold, eps_o the reverse.
    """
    z = (threshold.v_th - stats.means) / stats.sigma
    above = norm.sf(z)
    odd_side = above if threshold.odd_high else 1.0 - above
    eps_e = float(np.mean(odd_side[list(EVEN_STATES)]))
    eps_o = float(np.mean(1.0 - odd_side[list(ODD_STATES)]))
    return 1.0 - eps_e - eps_o


def optimal_parity_threshold(stats: SignalStats) -> tuple[ParityThreshold, float]:
    """Threshold maximizing F_p; returns (threshold, F_p)."""
    even, odd = stats.parity_means()
    odd_high = odd >= even
    lo, hi = float(stats.means.min()), float(stats.means.max())
    if hi - lo <= 0:
        threshold = ParityThreshold(v_th=lo, odd_high=odd_high)
        return threshold, parity_fidelity(stats, threshold)

    result = minimize_scalar(
        lambda v: -parity_fidelity(stats, ParityThreshold(v_th=float(v), odd_high=odd_high)),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-10 * max(1.0, hi - lo)},
    )
    threshold = ParityThreshold(v_th=float(result.x), odd_high=odd_high)
    return threshold, parity_fidelity(stats, threshold)


@dataclass(frozen=True)
class PostselectedState:
    """Average state of the kept shots and the success probability."""

    rho: TwoQubitDensityMatrix
    p_success: float
    n_kept: int

    def metrics(self) -> EntanglementMetrics:
        return EntanglementMetrics.of(self.rho, self.p_success, PHI_PLUS)


def postselect(
    shots: ParityShotBatch,
    outcome: int = ODD,
    threshold: ParityThreshold | None = None,
) -> PostselectedState:
    """
    Keep the shots with the given M_P, optionally re-digitized with another threshold.

    Raises:
        EmptySelectionError: If no shot has the requested outcome
    """
    if outcome not in (ODD, EVEN):
        raise ValueError(f"outcome must be -1 or +1, got {outcome}")
    batch = shots if threshold is None else shots.rethreshold(threshold)
    kept = batch.m_p == outcome
    n_kept = int(kept.sum())
    if n_kept == 0:
        raise EmptySelectionError(f"no shots with M_P={outcome:+d}")
    return PostselectedState(rho=batch.average(kept), p_success=n_kept / len(batch), n_kept=n_kept)


def rotation_a(phi: float) -> NDArray[np.complex128]:
    """Pi rotation of qubit A about the equatorial axis at angle phi: -i (sin phi X - cos phi Y)."""
    single = np.array([[0.0, np.exp(-1j * phi)], [-np.exp(1j * phi), 0.0]])
    return np.kron(np.eye(2), single)


def odd_frame_rotation(rho: TwoQubitDensityMatrix, theta: float) -> TwoQubitDensityMatrix:
    """
    Z rotation of qubit B's frame by theta.

    rho_{01,10} and rho_{00,11} both pick up exp(-i theta); theta equal to the
    phase of rho_{01,10} makes the odd coherence real.
    """
    frame = np.diag([1.0, 1.0, np.exp(1j * theta), np.exp(1j * theta)])
    return rho.transform(frame)


def odd_phase(rho: TwoQubitDensityMatrix) -> float:
    """Phase of rho_{01,10}."""
    return float(np.angle(rho.matrix[1, 2]))


def even_phase(rho: TwoQubitDensityMatrix) -> float:
    """Phase of rho_{00,11}: the state is closest to |00> + exp(-i phase)|11>."""
    return float(np.angle(rho.matrix[0, 3]))


def feedback_phase(phi_e: float) -> float:
    """Conditional-pulse phase (pi - phi_e)/2 that maps the even outcome onto Phi+, in [0, 2pi)."""
    return ((math.pi - phi_e) / 2.0) % (2.0 * math.pi)


@dataclass(frozen=True)
class FeedbackEntanglement:
    """Deterministic state after parity feedback and its metrics."""

    rho: TwoQubitDensityMatrix
    phi: float
    metrics: EntanglementMetrics


def feedback_entangle(
    shots: ParityShotBatch,
    phi: float,
    frame_theta: float = 0.0,
) -> FeedbackEntanglement:
    """
    Apply R_A(pi, phi) to every M_P = +1 shot and average all shots.

    Args:
        shots: Conditioned parity shots
        phi: Phase of the conditional pi pulse, in [0, 2pi)
        frame_theta: Frame rotation compensating the odd-subspace phase,
            applied before the metrics

    Returns:
        FeedbackEntanglement with p_success = 1
    """
    if not 0.0 <= phi < 2.0 * math.pi:
        raise ValueError(f"phi must be in [0, 2pi), got {phi}")
    if len(shots) == 0:
        raise EmptySelectionError("no shots")

    flip = rotation_a(phi)
    even = shots.m_p == EVEN
    total = np.zeros((4, 4), dtype=complex)
    if np.any(even):
        total += even.sum() * (flip @ shots.rho_post[even].mean(axis=0) @ flip.conj().T)
    if np.any(~even):
        total += (~even).sum() * shots.rho_post[~even].mean(axis=0)

    rho = TwoQubitDensityMatrix.normalized(total / len(shots))
    rho = odd_frame_rotation(rho, frame_theta)
    metrics = EntanglementMetrics.of(rho, 1.0, PHI_PLUS)
    return FeedbackEntanglement(rho=rho, phi=phi, metrics=metrics)


def damping_kraus(gamma_a: float, gamma_b: float) -> list[NDArray[np.complex128]]:
    """Kraus operators of independent energy relaxation with decay probabilities gamma."""
    per_qubit = []
    for gamma, qubit in ((gamma_a, "a"), (gamma_b, "b")):
        if not 0.0 <= gamma <= 1.0:
            raise ValueError(f"gamma_{qubit} must be in [0, 1], got {gamma}")
        k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
        k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
        per_qubit.append((k0, k1))
    kraus_a, kraus_b = per_qubit
    return [np.kron(kb, ka) for kb in kraus_b for ka in kraus_a]


def apply_kraus(
    rho: TwoQubitDensityMatrix, kraus: Sequence[NDArray[np.complex128]]
) -> TwoQubitDensityMatrix:
    m = rho.matrix
    out = sum((k @ m @ k.conj().T for k in kraus), np.zeros((4, 4), dtype=complex))
    return TwoQubitDensityMatrix.normalized(out)


def amplitude_damping(
    rho: TwoQubitDensityMatrix, gamma_a: float, gamma_b: float
) -> TwoQubitDensityMatrix:
    """Independent energy relaxation of each qubit with decay probabilities gamma."""
    return apply_kraus(rho, damping_kraus(gamma_a, gamma_b))


def dephasing(
    rho: TwoQubitDensityMatrix, lambda_a: float, lambda_b: float
) -> TwoQubitDensityMatrix:
    """Pure dephasing: coherences between different states of a qubit shrink by (1 - lambda)."""
    for value, name in ((lambda_a, "lambda_a"), (lambda_b, "lambda_b")):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must be in [0, 1], got {value}")
    bits_a = np.array([0, 1, 0, 1])
    bits_b = np.array([0, 0, 1, 1])
    keep_a = np.where(bits_a[:, None] != bits_a[None, :], 1.0 - lambda_a, 1.0)
    keep_b = np.where(bits_b[:, None] != bits_b[None, :], 1.0 - lambda_b, 1.0)
    return TwoQubitDensityMatrix.normalized(rho.matrix * keep_a * keep_b)


def decay_probability(duration: float, t1: float | None) -> float:
    """1 - exp(-duration / T1); zero when T1 is not set."""
    if t1 is None or math.isinf(t1):
        return 0.0
    if t1 <= 0:
        raise ValueError(f"T1 must be positive, got {t1}")
    return 1.0 - math.exp(-duration / t1)
