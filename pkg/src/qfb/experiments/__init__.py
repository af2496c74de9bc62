"""
Named experiments and the runner that executes them.

Importing this package registers every experiment.
"""

from . import entangle, parity, readout, reset, tomo  # noqa: F401
from .registry import (
    EXPERIMENTS,
    Experiment,
    RunContext,
    UnknownExperimentError,
    experiment_names,
    get_experiment,
)
from .runner import NonConvergenceError, RunManifest, run_experiment, validate_for

__all__ = [
    "EXPERIMENTS",
    "Experiment",
    "NonConvergenceError",
    "RunContext",
    "RunManifest",
    "UnknownExperimentError",
    "experiment_names",
    "get_experiment",
    "run_experiment",
    "validate_for",
]
