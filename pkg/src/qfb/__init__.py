"""
qfb - Digital feedback on dispersively measured superconducting qubits.

Simulates single-qubit reset and initialization by measurement-based
feedback, and deterministic two-qubit entanglement by a parity measurement
followed by a conditional pulse, together with the readout, tomography and
entanglement metrics needed to evaluate them.

Example:
    from pathlib import Path
    from qfb import load_config, run_experiment

    config = load_config(Path("configs/reset_sweep.toml"))
    manifest = run_experiment("reset-sweep", config)
    print(manifest.files)
"""

__version__ = "0.1.0"

# Core exports
from .config import ExperimentConfig, QfbSettings, load_config
from .experiments import RunManifest, experiment_names, run_experiment
from .parity import EntanglementMetrics, TwoQubitDensityMatrix
from .qubit import LevelPopulations, TransitionRates, steady_state

__all__ = [
    "__version__",
    "ExperimentConfig",
    "QfbSettings",
    "load_config",
    "RunManifest",
    "experiment_names",
    "run_experiment",
    "EntanglementMetrics",
    "TwoQubitDensityMatrix",
    "LevelPopulations",
    "TransitionRates",
    "steady_state",
]
