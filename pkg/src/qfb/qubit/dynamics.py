"""
Three-level transmon population dynamics.

Populations of |0>, |1>, |2> relax and get excited through the classical rate
model

    d/dt (P0, P1, P2) = G (P0, P1, P2),

    G = [[-g01,        g10,    0 ],
         [ g01, -g10 - g12,  g21 ],
         [   0,        g12, -g21 ]],

with rates in 1/us and no direct 0 <-> 2 transitions. This module holds the
value types, exact propagation (matrix exponential of G), steady states,
Boltzmann temperature fits, instantaneous pi pulses and the per-shot sampling
helpers used by the Monte-Carlo feedback loops.
"""

import logging
import math
from dataclasses import dataclass
from enum import IntEnum, StrEnum
from typing import Any

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy import constants
from scipy.linalg import expm, null_space

logger = logging.getLogger(__name__)

SUM_TOLERANCE = 1e-12
DEFAULT_ANHARMONICITY_GHZ = 0.3
_DEGENERACY_TOLERANCE = 1e-10
_MAX_EIGVEC_CONDITION = 1e10


class NoSteadyStateError(ValueError):
    """Raised when the rate generator has no unique stationary distribution."""


class NoPositiveTemperatureError(ValueError):
    """Raised when populations cannot be described by a positive temperature."""


class Level(IntEnum):
    """Transmon levels tracked by the rate model."""

    GROUND = 0
    EXCITED = 1
    SECOND = 2


class Transition(StrEnum):
    """Transitions addressable by a pi pulse."""

    GE = "0-1"
    EF = "1-2"

    @property
    def levels(self) -> tuple[int, int]:
        return (0, 1) if self is Transition.GE else (1, 2)


class LevelPopulations(BaseModel):
    """Classical occupation probabilities of |0>, |1>, |2>."""

    model_config = ConfigDict(frozen=True)

    p0: float = Field(ge=0.0, le=1.0)
    p1: float = Field(ge=0.0, le=1.0)
    p2: float = Field(default=0.0, ge=0.0, le=1.0)

    @model_validator(mode="after")
    def check_normalized(self) -> "LevelPopulations":
        total = self.p0 + self.p1 + self.p2
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"populations must sum to 1, got {total!r}")
        return self

    @classmethod
    def from_array(cls, values: NDArray[np.float64]) -> "LevelPopulations":
        """Build from a length-3 vector, clipping round-off and renormalizing."""
        clipped = np.clip(np.asarray(values, dtype=float), 0.0, None)
        total = clipped.sum()
        if total <= 0:
            raise ValueError("population vector has no weight")
        p = clipped / total
        # Put the residual of the division on the largest entry
        p[np.argmax(p)] += 1.0 - p.sum()
        return cls(p0=float(p[0]), p1=float(p[1]), p2=float(p[2]))

    @classmethod
    def pure(cls, level: int) -> "LevelPopulations":
        values = np.zeros(3)
        values[level] = 1.0
        return cls.from_array(values)

    @classmethod
    def from_levels(cls, levels: NDArray[np.int64]) -> "LevelPopulations":
        """Empirical populations of a sample of level indices."""
        counts = np.bincount(np.asarray(levels), minlength=3)[:3]
        return cls.from_array(counts.astype(float))

    def as_array(self) -> NDArray[np.float64]:
        return np.array([self.p0, self.p1, self.p2])

    @property
    def excitation(self) -> float:
        """Total population outside the ground state."""
        return self.p1 + self.p2


class TransitionRates(BaseModel):
    """Rates (1/us) of the three-level rate model; Gamma_02 = Gamma_20 = 0."""

    model_config = ConfigDict(frozen=True)

    g01: float = Field(default=0.0, ge=0.0, description="0 -> 1 excitation rate")
    g10: float = Field(default=0.0, ge=0.0, description="1 -> 0 relaxation rate")
    g12: float = Field(default=0.0, ge=0.0, description="1 -> 2 excitation rate")
    g21: float = Field(default=0.0, ge=0.0, description="2 -> 1 relaxation rate")

    @classmethod
    def from_lifetimes(
        cls,
        t01: float = math.inf,
        t10: float = math.inf,
        t12: float = math.inf,
        t21: float = math.inf,
    ) -> "TransitionRates":
        """Build from inverse rates in us; math.inf means the transition is off."""

        def rate(t: float) -> float:
            if t <= 0:
                raise ValueError(f"inverse rates must be positive, got {t}")
            return 0.0 if math.isinf(t) else 1.0 / t

        return cls(g01=rate(t01), g10=rate(t10), g12=rate(t12), g21=rate(t21))

    def generator(self) -> NDArray[np.float64]:
        """3x3 rate matrix; every column sums to zero."""
        return np.array(
            [
                [-self.g01, self.g10, 0.0],
                [self.g01, -self.g10 - self.g12, self.g21],
                [0.0, self.g12, -self.g21],
            ]
        )

    def without_excitation(self) -> "TransitionRates":
        """Same relaxation, no upward transitions."""
        return self.model_copy(update={"g01": 0.0, "g12": 0.0})

    @property
    def escape(self) -> NDArray[np.float64]:
        """Total out-rate of each level."""
        return np.array([self.g01, self.g10 + self.g12, self.g21])


class QubitFrequencies(BaseModel):
    """Transition frequencies in GHz; f12 defaults to f01 minus the anharmonicity."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    f01: float = Field(gt=0.0)
    anharmonicity: float = Field(default=DEFAULT_ANHARMONICITY_GHZ, ge=0.0)
    f12: float = Field(default=0.0)

    @model_validator(mode="before")
    @classmethod
    def fill_f12(cls, data: Any) -> Any:
        if isinstance(data, dict) and not data.get("f12") and "f01" in data:
            anharmonicity = data.get("anharmonicity", DEFAULT_ANHARMONICITY_GHZ)
            data = {**data, "f12": data["f01"] - anharmonicity}
        return data

    @model_validator(mode="after")
    def check_f12(self) -> "QubitFrequencies":
        if self.f12 <= 0:
            raise ValueError(f"f12 must be positive, got {self.f12}")
        return self

    def level_energies_ghz(self) -> NDArray[np.float64]:
        """Level energies in frequency units, ground at zero."""
        return np.array([0.0, self.f01, self.f01 + self.f12])


@dataclass(frozen=True)
class TemperatureFit:
    """Result of a Boltzmann fit."""

    temperature_mk: float
    degenerate: bool
    levels_used: int


def _is_degenerate(eigenvalues: NDArray[np.complex128]) -> bool:
    scale = max(1.0, float(np.max(np.abs(eigenvalues))))
    gaps = np.abs(eigenvalues[:, None] - eigenvalues[None, :])
    np.fill_diagonal(gaps, np.inf)
    return bool(np.min(gaps) < _DEGENERACY_TOLERANCE * scale)


def propagator(rates: TransitionRates, dt: float) -> NDArray[np.float64]:
    """
    Transition matrix exp(G dt); column i is the distribution after dt from level i.

    Uses the eigen-decomposition of G and falls back to scipy's
    scaling-and-squaring expm when eigenvalues (nearly) coincide.
    """
    if dt < 0:
        raise ValueError(f"dt must be non-negative, got {dt}")

    generator = rates.generator()
    if dt == 0 or not generator.any():
        return np.eye(3)

    eigenvalues, vectors = np.linalg.eig(generator)
    if _is_degenerate(eigenvalues) or np.linalg.cond(vectors) > _MAX_EIGVEC_CONDITION:
        return np.asarray(expm(generator * dt), dtype=float)

    result = (vectors * np.exp(eigenvalues * dt)) @ np.linalg.inv(vectors)
    return np.asarray(np.real(result), dtype=float)


def propagators(rates: TransitionRates, dts: NDArray[np.float64]) -> NDArray[np.float64]:
    """Stack of exp(G dt) for an array of durations, shape (n, 3, 3)."""
    dts = np.asarray(dts, dtype=float)
    if np.any(dts < 0):
        raise ValueError("durations must be non-negative")

    generator = rates.generator()
    eigenvalues, vectors = np.linalg.eig(generator)
    if (
        not generator.any()
        or _is_degenerate(eigenvalues)
        or np.linalg.cond(vectors) > _MAX_EIGVEC_CONDITION
    ):
        return np.stack([propagator(rates, float(dt)) for dt in dts])

    inverse = np.linalg.inv(vectors)
    exps = np.exp(dts[:, None] * eigenvalues[None, :])
    stack = np.einsum("ij,nj,jk->nik", vectors, exps, inverse)
    return np.asarray(np.real(stack), dtype=float)


def evolve(pops: LevelPopulations, rates: TransitionRates, dt: float) -> LevelPopulations:
    """
    Propagate populations by dt microseconds under the rate model.

    Raises:
        ValueError: If dt is negative
    """
    return LevelPopulations.from_array(propagator(rates, dt) @ pops.as_array())


def steady_state(rates: TransitionRates) -> LevelPopulations:
    """
    Stationary distribution, the normalized kernel vector of G.

    Raises:
        NoSteadyStateError: If the kernel is not one-dimensional
    """
    kernel = null_space(rates.generator())
    if kernel.shape[1] != 1:
        raise NoSteadyStateError(
            f"rate model has a {kernel.shape[1]}-dimensional kernel, no unique steady state"
        )

    vector = kernel[:, 0]
    vector = vector / vector.sum()
    return LevelPopulations.from_array(vector)


def effective_temperature(
    pops: LevelPopulations,
    freqs: QubitFrequencies,
    levels: int | None = None,
) -> TemperatureFit:
    """
    Boltzmann temperature of a population distribution.

    Fits ln P_i = c - E_i / (k_B T) by least squares over the levels with
    non-zero population (or the first `levels` of them). With two levels
    this is T = h f01 / (k_B ln(P0/P1)).

    Raises:
        NoPositiveTemperatureError: If P1 >= P0 or the fitted slope is not negative
    """
    if pops.p1 == 0.0 and pops.p2 == 0.0:
        return TemperatureFit(temperature_mk=0.0, degenerate=True, levels_used=1)
    if pops.p1 >= pops.p0:
        raise NoPositiveTemperatureError(
            f"no positive temperature for inverted populations p0={pops.p0}, p1={pops.p1}"
        )

    values = pops.as_array()
    energies = freqs.level_energies_ghz() * 1e9
    n = 3 if levels is None else levels
    if n not in (2, 3):
        raise ValueError(f"levels must be 2 or 3, got {levels}")
    if n == 3 and values[2] == 0.0:
        n = 2

    slope, _ = np.polyfit(energies[:n], np.log(values[:n]), 1)
    if slope >= 0:
        raise NoPositiveTemperatureError("no positive temperature: populations grow with energy")

    temperature = constants.h / (constants.k * -slope)
    return TemperatureFit(temperature_mk=float(temperature * 1e3), degenerate=False, levels_used=n)


def apply_pi_pulse(
    pops: LevelPopulations,
    transition: Transition,
    pulse_error: float = 0.0,
) -> LevelPopulations:
    """Swap the two addressed populations with probability 1 - pulse_error."""
    return rotate(pops, math.pi, transition, pulse_error)


def rotate(
    pops: LevelPopulations,
    theta: float,
    transition: Transition = Transition.GE,
    pulse_error: float = 0.0,
) -> LevelPopulations:
    """
    Incoherent population transfer of a rotation by theta on one transition.

    A fraction (1 - pulse_error) * sin^2(theta/2) of each addressed population
    moves to the other level; the third level is untouched.
    """
    if not 0.0 <= pulse_error <= 1.0:
        raise ValueError(f"pulse_error must be in [0, 1], got {pulse_error}")

    a, b = transition.levels
    values = pops.as_array()
    transfer = (1.0 - pulse_error) * math.sin(theta / 2.0) ** 2
    pa, pb = values[a], values[b]
    values[a] = (1.0 - transfer) * pa + transfer * pb
    values[b] = (1.0 - transfer) * pb + transfer * pa
    return LevelPopulations.from_array(values)


def relaxation_trace(
    initial: LevelPopulations,
    rates: TransitionRates,
    times: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Populations at each time, shape (len(times), 3)."""
    stack = propagators(rates, np.asarray(times, dtype=float))
    return np.asarray(stack @ initial.as_array(), dtype=float)


# Per-shot sampling helpers for the Monte-Carlo loops


def sample_levels(pops: LevelPopulations, n: int, rng: np.random.Generator) -> NDArray[np.int64]:
    """Draw n level indices from a population distribution."""
    return rng.choice(3, size=n, p=pops.as_array()).astype(np.int64)


def _draw_columns(
    columns: NDArray[np.float64], rng: np.random.Generator
) -> NDArray[np.int64]:
    """Sample one index per shot from per-shot categorical columns, shape (3, n)."""
    cdf = np.cumsum(columns, axis=0)
    u = rng.random(columns.shape[1])
    return np.minimum((u > cdf[0]).astype(np.int64) + (u > cdf[1]), 2)


def sample_evolution(
    levels: NDArray[np.int64],
    rates: TransitionRates,
    dt: float | NDArray[np.float64],
    rng: np.random.Generator,
) -> NDArray[np.int64]:
    """
    Evolve sampled levels over dt exactly.

    Each shot's new level is drawn from column `level` of exp(G dt), which
    accounts for any number of transitions during the wait. dt may be a
    scalar or one duration per shot.
    """
    levels = np.asarray(levels, dtype=np.int64)
    if np.ndim(dt) == 0:
        columns = propagator(rates, float(dt))[:, levels]
    else:
        stack = propagators(rates, np.asarray(dt, dtype=float))
        columns = stack[np.arange(levels.size), :, levels].T
    return _draw_columns(columns, rng)


def flip_levels(
    levels: NDArray[np.int64],
    transition: Transition,
    pulse_error: float,
    rng: np.random.Generator,
    where: NDArray[np.bool_] | None = None,
) -> NDArray[np.int64]:
    """Apply a pi pulse to selected shots; each flip fails with pulse_error."""
    levels = np.asarray(levels, dtype=np.int64).copy()
    a, b = transition.levels
    selected = np.ones(levels.size, dtype=bool) if where is None else np.asarray(where)
    success = rng.random(levels.size) >= pulse_error
    on_a = selected & success & (levels == a)
    on_b = selected & success & (levels == b)
    levels[on_a] = b
    levels[on_b] = a
    return levels


def rotate_levels(
    levels: NDArray[np.int64],
    theta: float,
    transition: Transition,
    pulse_error: float,
    rng: np.random.Generator,
) -> NDArray[np.int64]:
    """Sampled form of `rotate`: each addressed shot switches with sin^2(theta/2)."""
    levels = np.asarray(levels, dtype=np.int64).copy()
    a, b = transition.levels
    transfer = (1.0 - pulse_error) * math.sin(theta / 2.0) ** 2
    switch = rng.random(levels.size) < transfer
    on_a = switch & (levels == a)
    on_b = switch & (levels == b)
    levels[on_a] = b
    levels[on_b] = a
    return levels
