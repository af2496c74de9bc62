"""
Single-shot dispersive readout of a transmon.

A shot integrates one homodyne quadrature over a window of the measurement
pulse. The qubit may make at most one level transition during the pulse; the
integrated voltage is the window-time-weighted mixture of the pre- and
post-jump means plus Gaussian noise. Shots are digitized against a threshold
into H (declared-|0> side) or L.

Provides:
- ShotModel, ReadoutErrorModel, Threshold value types
- Vectorized shot generation and jump sampling
- Empirical threshold optimization, contrast and assignment errors
- Postselection on a pre-measurement and QND correlation statistics
- The analytic error model p^M_ij (Gaussian tails over the jump-time density)
- Rabi-visibility fits and histograms for export
"""

import logging
import math
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.integrate import quad
from scipy.stats import norm

from .dynamics import TransitionRates

logger = logging.getLogger(__name__)

_TIE_TOLERANCE = 1e-12


class EmptySelectionError(ValueError):
    """Raised when an analysis receives no shots to work on."""


class Outcome(StrEnum):
    """Digitized measurement result."""

    H = "H"
    L = "L"


class Polarity(StrEnum):
    """Which side of the threshold is declared |0>."""

    GROUND_HIGH = "ground-high"
    GROUND_LOW = "ground-low"


class Threshold(BaseModel):
    """Digitization threshold voltage."""

    model_config = ConfigDict(frozen=True)

    v_th: float
    polarity: Polarity = Polarity.GROUND_HIGH

    @field_validator("v_th")
    @classmethod
    def check_finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError(f"threshold must be finite, got {v}")
        return v


class ShotModel(BaseModel):
    """Generative model of integrated single-shot voltages."""

    model_config = ConfigDict(frozen=True)

    mu0: float = Field(default=1.0, description="Mean voltage for |0>")
    mu1: float = Field(default=-1.0, description="Mean voltage for |1>")
    mu2: float | None = Field(default=None, description="Mean voltage for |2>, defaults to mu1")
    sigma: float = Field(gt=0.0, description="Voltage noise std of one integrated shot")
    t_meas: float = Field(gt=0.0, description="Measurement pulse duration in us")
    window_start: float = Field(default=0.0, ge=0.0)
    window_length: float | None = Field(default=None, gt=0.0)

    @model_validator(mode="after")
    def check_window(self) -> "ShotModel":
        if self.window_end > self.t_meas + 1e-12:
            raise ValueError(
                f"integration window [{self.window_start}, {self.window_end}] "
                f"exceeds t_meas={self.t_meas}"
            )
        if self.window_end <= self.window_start:
            raise ValueError("integration window is empty")
        return self

    @property
    def window_end(self) -> float:
        if self.window_length is None:
            return self.t_meas
        return self.window_start + self.window_length

    @property
    def mu(self) -> dict[int, float]:
        return {0: self.mu0, 1: self.mu1, 2: self.mu1 if self.mu2 is None else self.mu2}

    def means(self) -> NDArray[np.float64]:
        return np.array([self.mu[0], self.mu[1], self.mu[2]])

    def ground_polarity(self) -> Polarity:
        return Polarity.GROUND_HIGH if self.mu0 >= self.mu1 else Polarity.GROUND_LOW

    def midpoint(self) -> Threshold:
        """Threshold halfway between the |0> and |1> means."""
        return Threshold(v_th=(self.mu0 + self.mu1) / 2.0, polarity=self.ground_polarity())

    def before_fraction(self, jump_time: NDArray[np.float64]) -> NDArray[np.float64]:
        """Fraction of the integration window spent before the jump."""
        span = self.window_end - self.window_start
        return np.clip((np.asarray(jump_time) - self.window_start) / span, 0.0, 1.0)


@dataclass(frozen=True)
class ReadoutErrorModel:
    """
    Measurement statistics p[M][i][j].

    M indexes the result (0 = H, 1 = L), i the level before and j the level
    after the measurement.
    """

    p: NDArray[np.float64]

    def __post_init__(self) -> None:
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2, 3, 3):
            raise ValueError(f"expected shape (2, 3, 3), got {p.shape}")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12):
            raise ValueError("probabilities must lie in [0, 1]")
        totals = p.sum(axis=(0, 2))
        if np.any(np.abs(totals - 1.0) > 1e-9):
            raise ValueError(f"rows must sum to 1 over (M, j), got {totals}")
        object.__setattr__(self, "p", p)

    @classmethod
    def ideal(cls) -> "ReadoutErrorModel":
        p = np.zeros((2, 3, 3))
        p[0, 0, 0] = 1.0
        p[1, 1, 1] = 1.0
        p[1, 2, 2] = 1.0
        return cls(p)

    @classmethod
    def from_assignment(
        cls, eps0: float, eps1: float, eps2: float | None = None
    ) -> "ReadoutErrorModel":
        """QND readout with assignment errors P(L|0)=eps0, P(H|1)=eps1, P(H|2)=eps2."""
        eps2 = eps1 if eps2 is None else eps2
        p = np.zeros((2, 3, 3))
        p[0, 0, 0], p[1, 0, 0] = 1.0 - eps0, eps0
        p[0, 1, 1], p[1, 1, 1] = eps1, 1.0 - eps1
        p[0, 2, 2], p[1, 2, 2] = eps2, 1.0 - eps2
        return cls(p)

    def get(self, outcome: Outcome, i: int, j: int) -> float:
        return float(self.p[0 if outcome is Outcome.H else 1, i, j])

    @property
    def p12(self) -> float:
        """Probability that a measurement starting in |1> ends in |2>."""
        return float(self.p[:, 1, 2].sum())


@dataclass(frozen=True)
class ShotBatch:
    """Voltages and end-of-pulse levels of a batch of shots."""

    voltages: NDArray[np.float64]
    post_levels: NDArray[np.int64]
    jump_times: NDArray[np.float64]


@dataclass(frozen=True)
class PostselectionResult:
    """Shots kept after conditioning on a pre-measurement."""

    kept: NDArray[np.float64]
    kept_fraction: float
    empty: bool


@dataclass(frozen=True)
class QndCorrelations:
    """Conditional repeatability of two consecutive measurements; None if undefined."""

    p_h_given_h: float | None
    p_l_given_l: float | None
    n_h: int
    n_l: int


@dataclass(frozen=True)
class RabiFit:
    """Fit of P_H(theta) = offset + amplitude * cos(theta)."""

    offset: float
    amplitude: float

    @property
    def visibility(self) -> float:
        """Peak-to-peak swing of the fitted oscillation."""
        return 2.0 * abs(self.amplitude)


def sample_jumps(
    levels: NDArray[np.int64],
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
) -> tuple[NDArray[np.float64], NDArray[np.int64]]:
    """
    Draw at most one transition per shot during the measurement pulse.

    Returns:
        (jump_times, post_levels); jump_time is inf for shots without a jump
    """
    levels = np.asarray(levels, dtype=np.int64)
    escape = rates.escape[levels]
    with np.errstate(divide="ignore"):
        scale = np.where(escape > 0, 1.0 / np.where(escape > 0, escape, 1.0), np.inf)
    times = np.where(escape > 0, rng.exponential(1.0, size=levels.size) * scale, np.inf)
    jumped = times < model.t_meas

    # From |1> the jump goes down with weight g10, up with weight g12
    out_of_one = rates.g10 + rates.g12
    down_share = rates.g10 / out_of_one if out_of_one > 0 else 1.0
    goes_down = rng.random(levels.size) < down_share
    destination = np.select(
        [levels == 0, levels == 1, levels == 2],
        [np.ones_like(levels), np.where(goes_down, 0, 2), np.ones_like(levels)],
    )

    post = np.where(jumped, destination, levels)
    return np.where(jumped, times, np.inf), post.astype(np.int64)


def generate_shots(
    levels: NDArray[np.int64],
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
) -> ShotBatch:
    """Vectorized generate_shot for an array of pre-measurement levels."""
    levels = np.asarray(levels, dtype=np.int64)
    jump_times, post = sample_jumps(levels, model, rates, rng)
    means = model.means()
    before = model.before_fraction(jump_times)
    mean_v = before * means[levels] + (1.0 - before) * means[post]
    voltages = mean_v + rng.normal(0.0, model.sigma, size=levels.size)
    return ShotBatch(voltages=voltages, post_levels=post, jump_times=jump_times)


def generate_shot(
    true_state: int,
    model: ShotModel,
    rates: TransitionRates,
    rng: np.random.Generator,
) -> tuple[float, int]:
    """One shot: (integrated voltage, level at the end of the pulse)."""
    if true_state not in (0, 1, 2):
        raise ValueError(f"invalid level index {true_state}")
    batch = generate_shots(np.array([true_state]), model, rates, rng)
    return float(batch.voltages[0]), int(batch.post_levels[0])


def digitize_many(
    voltages: NDArray[np.float64],
    threshold: Threshold,
    polarity: Polarity | None = None,
) -> NDArray[np.bool_]:
    """True where a shot digitizes to H. A voltage equal to the threshold is L."""
    side = threshold.polarity if polarity is None else polarity
    v = np.asarray(voltages)
    if side is Polarity.GROUND_HIGH:
        return v > threshold.v_th
    return v < threshold.v_th


def digitize(v: float, threshold: Threshold, polarity: Polarity | None = None) -> Outcome:
    """Digitize one voltage into H (declared-|0> side) or L."""
    return Outcome.H if bool(digitize_many(np.array([v]), threshold, polarity)[0]) else Outcome.L


def optimal_threshold(
    shots_h_prep: NDArray[np.float64],
    shots_l_prep: NDArray[np.float64],
) -> tuple[Threshold, float]:
    """
    Threshold maximizing the separation of the two cumulative histograms.

    Candidates are midpoints between consecutive distinct sample values. When
    several neighbouring candidates tie for the maximum, the midpoint of the
    first tying interval is returned. The polarity follows the data: the
    |0>-prepared set is declared H.

    Returns:
        (threshold, contrast) where contrast = max |CDF_0(v) - CDF_1(v)|
    """
    a = np.sort(np.asarray(shots_h_prep, dtype=float))
    b = np.sort(np.asarray(shots_l_prep, dtype=float))
    if a.size == 0 or b.size == 0:
        raise EmptySelectionError("both shot sets must be non-empty")

    values = np.unique(np.concatenate([a, b]))
    if values.size == 1:
        return Threshold(v_th=float(values[0])), 0.0

    candidates = (values[:-1] + values[1:]) / 2.0
    cdf_h = np.searchsorted(a, candidates, side="right") / a.size
    cdf_l = np.searchsorted(b, candidates, side="right") / b.size
    diff = cdf_l - cdf_h
    separation = np.abs(diff)
    best = float(separation.max())

    tying = np.flatnonzero(separation >= best - _TIE_TOLERANCE)
    breaks = np.flatnonzero(np.diff(tying) != 1)
    run_end = tying[breaks[0]] if breaks.size else tying[-1]
    v_th = 0.5 * (candidates[tying[0]] + candidates[run_end])

    polarity = Polarity.GROUND_HIGH if diff[tying[0]] >= 0 else Polarity.GROUND_LOW
    return Threshold(v_th=float(v_th), polarity=polarity), best


def assignment_errors(
    shots_h_prep: NDArray[np.float64],
    shots_l_prep: NDArray[np.float64],
    threshold: Threshold,
) -> tuple[float, float]:
    """(eps_g, eps_e): fraction of |0>-prepared shots read L and |1>-prepared shots read H."""
    if len(shots_h_prep) == 0 or len(shots_l_prep) == 0:
        raise EmptySelectionError("both shot sets must be non-empty")
    eps_g = 1.0 - float(np.mean(digitize_many(shots_h_prep, threshold)))
    eps_e = float(np.mean(digitize_many(shots_l_prep, threshold)))
    return eps_g, eps_e


def postselect_ground(
    m_a_high: NDArray[np.bool_],
    v_b: NDArray[np.float64],
) -> PostselectionResult:
    """
    Keep the M_B voltages of shots whose pre-measurement M_A gave H.

    An empty kept set is reported through the `empty` flag.
    """
    m_a_high = np.asarray(m_a_high, dtype=bool)
    v_b = np.asarray(v_b, dtype=float)
    if m_a_high.size == 0:
        raise EmptySelectionError("no shot pairs to postselect")
    if m_a_high.shape != v_b.shape:
        raise ValueError("M_A results and M_B voltages must have the same shape")

    kept = v_b[m_a_high]
    if kept.size == 0:
        logger.warning("Postselection kept no shots out of %s", m_a_high.size)
    return PostselectionResult(
        kept=kept,
        kept_fraction=kept.size / m_a_high.size,
        empty=kept.size == 0,
    )


def qnd_correlations(
    m_b_high: NDArray[np.bool_],
    m_c_high: NDArray[np.bool_],
) -> QndCorrelations:
    """Empirical P(H_C | H_B) and P(L_C | L_B); an entry with no conditioning shots is None."""
    m_b = np.asarray(m_b_high, dtype=bool)
    m_c = np.asarray(m_c_high, dtype=bool)
    if m_b.shape != m_c.shape:
        raise ValueError("measurement result arrays must have the same shape")

    n_h = int(m_b.sum())
    n_l = int((~m_b).sum())
    p_hh = float((m_b & m_c).sum() / n_h) if n_h else None
    p_ll = float((~m_b & ~m_c).sum() / n_l) if n_l else None
    if p_hh is None or p_ll is None:
        logger.warning("QND correlation undefined: n_H=%s, n_L=%s", n_h, n_l)
    return QndCorrelations(p_h_given_h=p_hh, p_l_given_l=p_ll, n_h=n_h, n_l=n_l)


def _prob_high(mean: float, model: ShotModel, threshold: Threshold, polarity: Polarity) -> float:
    z = (threshold.v_th - mean) / model.sigma
    return float(norm.sf(z) if polarity is Polarity.GROUND_HIGH else norm.cdf(z))


def error_model(
    model: ShotModel,
    rates: TransitionRates,
    threshold: Threshold,
    polarity: Polarity | None = None,
) -> ReadoutErrorModel:
    """
    Analytic p^M_ij of the single-jump readout model.

    No-jump shots contribute the Gaussian tail at the level's mean; a jump at
    time t to level j contributes the tail at the window-weighted mean,
    integrated against the jump-time density g_ij exp(-escape_i t).
    """
    side = threshold.polarity if polarity is None else polarity
    means = model.means()
    escape = rates.escape
    transitions = rates.generator()
    breakpoints = [x for x in (model.window_start, model.window_end) if 0 < x < model.t_meas]

    p = np.zeros((2, 3, 3))
    for i in range(3):
        survive = math.exp(-escape[i] * model.t_meas)
        high = _prob_high(means[i], model, threshold, side)
        p[0, i, i] += survive * high
        p[1, i, i] += survive * (1.0 - high)

        for j in range(3):
            rate = transitions[j, i] if j != i else 0.0
            if rate <= 0:
                continue

            def high_at(t: float, i: int = i, j: int = j) -> float:
                f = float(model.before_fraction(np.array(t)))
                return _prob_high(f * means[i] + (1 - f) * means[j], model, threshold, side)

            def density(t: float, i: int = i, rate: float = rate) -> float:
                return rate * math.exp(-escape[i] * t)

            total = (rate / escape[i]) * (1.0 - survive)
            high_part, _ = quad(
                lambda t, h=high_at, d=density: d(t) * h(t),
                0.0,
                model.t_meas,
                points=breakpoints or None,
                epsabs=1e-13,
            )
            p[0, i, j] += high_part
            p[1, i, j] += total - high_part

    return ReadoutErrorModel(np.clip(p, 0.0, 1.0))


def rabi_visibility(thetas: NDArray[np.float64], p_high: NDArray[np.float64]) -> RabiFit:
    """Least-squares fit of the H probability against rotation angle."""
    thetas = np.asarray(thetas, dtype=float)
    design = np.column_stack([np.ones_like(thetas), np.cos(thetas)])
    (offset, amplitude), *_ = np.linalg.lstsq(design, np.asarray(p_high, dtype=float), rcond=None)
    return RabiFit(offset=float(offset), amplitude=float(amplitude))


def histogram(
    shots_prep0: NDArray[np.float64],
    shots_prep1: NDArray[np.float64],
    bins: int = 100,
) -> tuple[NDArray[np.float64], NDArray[np.int64], NDArray[np.int64]]:
    """Counts of both shot sets over shared bin edges."""
    edges = np.histogram_bin_edges(np.concatenate([shots_prep0, shots_prep1]), bins=bins)
    counts0, _ = np.histogram(shots_prep0, bins=edges)
    counts1, _ = np.histogram(shots_prep1, bins=edges)
    return edges, counts0, counts1
