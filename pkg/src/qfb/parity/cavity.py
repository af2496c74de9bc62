"""
Dispersive cavity pointer states for the two-qubit parity meter.

Each computational state s = |b a> pulls the cavity resonance down by
2*chi_A (qubit A excited) and 2*chi_B (qubit B excited). The drive sits at the
mean of the four pulled frequencies plus an optional offset, so in the drive
frame state s sees the detuning

    Delta_s = mean(pull) - pull(s) + drive_detuning

and its coherent amplitude obeys d(alpha_s)/dt = -(kappa/2 + i Delta_s) alpha_s + eps_p.
The linear ODE is solved in closed form, during the pulse and through the
ring-down after it.

Two states i, j acquire the coherence multiplier
exp(-i (Delta_i - Delta_j) * integral(alpha_i conj(alpha_j) dt)): the imaginary
part of the integral gives measurement-induced dephasing, the real part the
deterministic AC-Stark phase.

Frequencies in the config are cyclic (MHz, i.e. x/2pi); everything is
converted to angular units (rad/us) internally. Times are in us.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.integrate import simpson
from scipy.signal import lfilter

from .states import BASIS_LABELS

logger = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
RING_DOWN_FLOOR = 1e-3
STEPS_PER_CYCLE = 40
_EXPONENT_ROUND_OFF = 1e-9


class CavityConfig(BaseModel):
    """Cavity, drive and detection parameters of the parity measurement."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kappa_mhz: float = Field(gt=0.0, description="Linewidth kappa/2pi")
    chi_a_mhz: float = Field(description="Dispersive shift chi_A/2pi")
    chi_b_mhz: float = Field(description="Dispersive shift chi_B/2pi")
    n_ss: float | None = Field(default=None, gt=0.0, description="Photons at resonance")
    eps_p: float | None = Field(
        default=None, gt=0.0, description="Drive amplitude in sqrt(photons)/us"
    )
    drive_detuning_mhz: float = Field(default=0.0, description="Offset from the mean frequency")
    eta: float = Field(default=1.0, gt=0.0, le=1.0, description="Quantum efficiency")
    lo_phase: float = Field(default=0.0, description="Homodyne quadrature angle")
    jpa_bandwidth_mhz: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_drive(self) -> "CavityConfig":
        if (self.n_ss is None) == (self.eps_p is None):
            raise ValueError("exactly one of n_ss and eps_p must be given")
        return self

    @property
    def kappa(self) -> float:
        return TWO_PI * self.kappa_mhz

    @property
    def drive(self) -> float:
        """eps_p; n_ss photons at resonance means eps_p = (kappa/2) sqrt(n_ss)."""
        if self.eps_p is not None:
            return self.eps_p
        assert self.n_ss is not None
        return 0.5 * self.kappa * math.sqrt(self.n_ss)

    def pulls(self) -> NDArray[np.float64]:
        """Angular pull of the resonance for |00>, |01>, |10>, |11>."""
        a, b = 2.0 * TWO_PI * self.chi_a_mhz, 2.0 * TWO_PI * self.chi_b_mhz
        return np.array([0.0, a, b, a + b])

    def detunings(self) -> NDArray[np.float64]:
        pulls = self.pulls()
        return pulls.mean() - pulls + TWO_PI * self.drive_detuning_mhz

    def rates(self) -> NDArray[np.complex128]:
        """Complex decay rates kappa/2 + i Delta_s."""
        return 0.5 * self.kappa + 1j * self.detunings()

    def steady_amplitudes(self) -> NDArray[np.complex128]:
        return self.drive / self.rates()

    def default_dt(self) -> float:
        """Step resolving the fastest relative rotation between pointer states."""
        spread = float(np.ptp(self.detunings())) + self.kappa
        return min(1.0 / (10.0 * self.kappa), TWO_PI / (STEPS_PER_CYCLE * spread))


@dataclass(frozen=True, eq=False)
class PointerTrajectory:
    """Coherent amplitudes alpha_s(t) on a uniform grid, pulse then ring-down."""

    times: NDArray[np.float64]
    alpha: NDArray[np.complex128]
    tau_p: float
    pulse_end: int = field(repr=False)

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])

    @property
    def span(self) -> tuple[float, float]:
        return float(self.times[0]), float(self.times[-1])

    def amplitude(self, label: str) -> NDArray[np.complex128]:
        return self.alpha[BASIS_LABELS.index(label)]

    def photons(self) -> NDArray[np.float64]:
        return np.abs(self.alpha) ** 2

    def integrate(self, values: NDArray[np.complex128]) -> NDArray[np.complex128]:
        """Integral over the whole trajectory, split at the end of the pulse."""
        k = self.pulse_end
        total = simpson(values[..., : k + 1], x=self.times[: k + 1], axis=-1)
        if k < self.times.size - 1:
            total = total + simpson(values[..., k:], x=self.times[k:], axis=-1)
        return np.asarray(total)


def evolve_pointer(
    cfg: CavityConfig,
    tau_p: float,
    dt: float | None = None,
    ring_down: bool = True,
) -> PointerTrajectory:
    """
    Pointer amplitudes for a square pulse of length tau_p starting from vacuum.

    Args:
        cfg: Cavity configuration
        tau_p: Pulse length in us
        dt: Grid step; defaults to cfg.default_dt()
        ring_down: Extend the grid after the pulse until every |alpha| < 1e-3

    Raises:
        ValueError: If tau_p <= 0 or dt exceeds 1/(10 kappa)
    """
    if tau_p <= 0:
        raise ValueError(f"tau_p must be positive, got {tau_p}")
    step = cfg.default_dt() if dt is None else dt
    if step <= 0 or step > 1.0 / (10.0 * cfg.kappa) * (1 + 1e-12):
        limit = 1.0 / (10.0 * cfg.kappa)
        raise ValueError(f"dt must be in (0, 1/(10 kappa)] = (0, {limit:.4g}], got {step}")

    n_pulse = max(2, math.ceil(tau_p / step))
    h = tau_p / n_pulse
    rates = cfg.rates()[:, None]
    alpha_ss = cfg.steady_amplitudes()[:, None]

    t_pulse = h * np.arange(n_pulse + 1)
    alpha_pulse = alpha_ss * (1.0 - np.exp(-rates * t_pulse[None, :]))

    times, alpha = t_pulse, alpha_pulse
    alpha_end = alpha_pulse[:, -1]
    peak = float(np.max(np.abs(alpha_end)))
    if ring_down and peak > RING_DOWN_FLOOR:
        t_ring = math.log(peak / RING_DOWN_FLOOR) / (0.5 * cfg.kappa)
        n_ring = max(2, math.ceil(t_ring / h))
        offsets = h * np.arange(1, n_ring + 1)
        alpha_ring = alpha_end[:, None] * np.exp(-rates * offsets[None, :])
        times = np.concatenate([t_pulse, tau_p + offsets])
        alpha = np.concatenate([alpha_pulse, alpha_ring], axis=1)

    logger.debug("Pointer trajectory: tau_p=%.3f us, %s points, step %.2e us", tau_p, times.size, h)
    return PointerTrajectory(times=times, alpha=alpha, tau_p=tau_p, pulse_end=n_pulse)


@dataclass(frozen=True, eq=False)
class SignalStats:
    """Integrated homodyne voltage statistics of the four basis states."""

    means: NDArray[np.float64]
    var: float
    window: tuple[float, float]

    @property
    def sigma(self) -> float:
        return math.sqrt(self.var)

    def snr(self, i: int, j: int) -> float:
        return float(abs(self.means[i] - self.means[j]) / math.sqrt(2.0 * self.var))

    def parity_means(self) -> tuple[float, float]:
        """(even, odd) averages of the state means."""
        m = self.means
        return float((m[0] + m[3]) / 2.0), float((m[1] + m[2]) / 2.0)

    def parity_separation(self) -> float:
        even, odd = self.parity_means()
        return abs(odd - even)


def detected_signal(traj: PointerTrajectory, cfg: CavityConfig) -> NDArray[np.float64]:
    """sqrt(kappa eta) Re[alpha e^{-i lo}] on the trajectory grid, after the JPA low-pass."""
    signal = math.sqrt(cfg.kappa * cfg.eta) * np.real(traj.alpha * np.exp(-1j * cfg.lo_phase))
    if cfg.jpa_bandwidth_mhz is not None:
        pole = math.exp(-TWO_PI * cfg.jpa_bandwidth_mhz * traj.dt)
        signal = lfilter([1.0 - pole], [1.0, -pole], signal, axis=-1)
    return np.asarray(signal, dtype=float)


def signal_stats(
    traj: PointerTrajectory,
    cfg: CavityConfig,
    window: tuple[float, float],
) -> SignalStats:
    """
    Means and common variance of the voltage integrated over [t_i, t_f].

    The variance is (t_f - t_i)/2, the single-quadrature vacuum noise of the
    integrated record; eta enters the means through sqrt(kappa eta).

    Raises:
        ValueError: If the window is empty or leaves the trajectory span
    """
    t_i, t_f = window
    start, end = traj.span
    if not start <= t_i < t_f <= end + 1e-12:
        raise ValueError(f"window [{t_i}, {t_f}] is outside the trajectory span [{start}, {end}]")

    signal = detected_signal(traj, cfg)
    inside = (traj.times > t_i) & (traj.times < t_f)
    grid = np.concatenate([[t_i], traj.times[inside], [t_f]])
    values = np.stack([np.interp(grid, traj.times, row) for row in signal])
    means = simpson(values, x=grid, axis=-1)
    return SignalStats(
        means=np.asarray(means, dtype=float), var=(t_f - t_i) / 2.0, window=(t_i, t_f)
    )


@dataclass(frozen=True)
class BetaCoefficients:
    """Joint-readout operator b0 + bA Z_A + bB Z_B + bBA Z_B Z_A (Z = +1 on |0>)."""

    b0: float
    bA: float
    bB: float
    bBA: float

    def __post_init__(self) -> None:
        if not all(math.isfinite(v) for v in (self.b0, self.bA, self.bB, self.bBA)):
            raise ValueError("beta coefficients must be finite")

    def means(self) -> NDArray[np.float64]:
        """Forward model: expected voltage of |00>, |01>, |10>, |11>."""
        z_b = np.array([1.0, 1.0, -1.0, -1.0])
        z_a = np.array([1.0, -1.0, 1.0, -1.0])
        return self.b0 + self.bA * z_a + self.bB * z_b + self.bBA * z_a * z_b

    def is_parity_meter(self, tolerance: float = 0.02) -> bool:
        """True when both single-qubit terms are below tolerance * |bBA|."""
        limit = tolerance * abs(self.bBA)
        return abs(self.bA) < limit and abs(self.bB) < limit


def beta_from_means(means: NDArray[np.float64] | list[float]) -> BetaCoefficients:
    """Walsh-Hadamard inversion of the four state means."""
    v = np.asarray(means, dtype=float)
    if v.shape != (4,):
        raise ValueError(f"expected four means, got shape {v.shape}")
    v00, v01, v10, v11 = v
    return BetaCoefficients(
        b0=float((v00 + v01 + v10 + v11) / 4.0),
        bA=float((v00 - v01 + v10 - v11) / 4.0),
        bB=float((v00 + v01 - v10 - v11) / 4.0),
        bBA=float((v00 - v01 - v10 + v11) / 4.0),
    )


@dataclass(frozen=True)
class CoherenceFactor:
    """rho_ij multiplier decay * exp(i phase)."""

    decay: float
    phase: float

    @property
    def multiplier(self) -> complex:
        return self.decay * complex(math.cos(self.phase), math.sin(self.phase))


CoherenceFactors = dict[tuple[int, int], CoherenceFactor]


def coherence_factors(traj: PointerTrajectory, cfg: CavityConfig, tau_p: float) -> CoherenceFactors:
    """
    Dephasing and AC-Stark phase for every pair i < j of basis states.

    A positive decay exponent can only come from a trajectory that is too
    coarse; it is logged and clamped to zero.

    Raises:
        ValueError: If the trajectory is for another pulse length or stops
            before the cavity has rung down
    """
    if not math.isclose(traj.tau_p, tau_p, rel_tol=0.0, abs_tol=1e-12):
        raise ValueError(f"trajectory was computed for tau_p={traj.tau_p}, not {tau_p}")
    residual = float(np.max(np.abs(traj.alpha[:, -1])))
    if residual > RING_DOWN_FLOOR * (1 + 1e-9):
        raise ValueError(f"trajectory ends with |alpha|={residual:.3g}; ring-down is not covered")

    detunings = cfg.detunings()
    factors: CoherenceFactors = {}
    for i in range(4):
        for j in range(i + 1, 4):
            overlap = complex(traj.integrate(traj.alpha[i] * np.conj(traj.alpha[j])))
            delta = detunings[i] - detunings[j]
            exponent = float(delta * overlap.imag)
            if exponent > _EXPONENT_ROUND_OFF:
                logger.warning(
                    "Coherence %s,%s would grow by exp(%.3g); clamped to no decay", i, j, exponent
                )
            factors[(i, j)] = CoherenceFactor(
                decay=math.exp(min(exponent, 0.0)),
                phase=float(-delta * overlap.real),
            )
    return factors


def identity_factors() -> CoherenceFactors:
    """Factors of an ideal, non-dephasing measurement."""
    return {(i, j): CoherenceFactor(1.0, 0.0) for i in range(4) for j in range(i + 1, 4)}
