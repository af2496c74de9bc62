"""Single-qubit models: three-level rate dynamics and dispersive single-shot readout."""

from .dynamics import (
    Level,
    LevelPopulations,
    NoPositiveTemperatureError,
    NoSteadyStateError,
    QubitFrequencies,
    TemperatureFit,
    Transition,
    TransitionRates,
    apply_pi_pulse,
    effective_temperature,
    evolve,
    relaxation_trace,
    rotate,
    sample_evolution,
    steady_state,
)
from .readout import (
    EmptySelectionError,
    Outcome,
    Polarity,
    ReadoutErrorModel,
    ShotModel,
    Threshold,
    digitize,
    error_model,
    generate_shot,
    generate_shots,
    optimal_threshold,
    postselect_ground,
    qnd_correlations,
    rabi_visibility,
)

__all__ = [
    "EmptySelectionError",
    "Level",
    "LevelPopulations",
    "NoPositiveTemperatureError",
    "NoSteadyStateError",
    "Outcome",
    "Polarity",
    "QubitFrequencies",
    "ReadoutErrorModel",
    "ShotModel",
    "TemperatureFit",
    "Threshold",
    "Transition",
    "TransitionRates",
    "apply_pi_pulse",
    "digitize",
    "effective_temperature",
    "error_model",
    "evolve",
    "generate_shot",
    "generate_shots",
    "optimal_threshold",
    "postselect_ground",
    "qnd_correlations",
    "rabi_visibility",
    "relaxation_trace",
    "rotate",
    "sample_evolution",
    "steady_state",
]
