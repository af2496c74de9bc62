"""Two-qubit parity measurement: cavity pointer model, measurement channel, entanglement metrics."""

from .cavity import (
    BetaCoefficients,
    CavityConfig,
    CoherenceFactor,
    PointerTrajectory,
    SignalStats,
    beta_from_means,
    coherence_factors,
    evolve_pointer,
    signal_stats,
)
from .channel import (
    EVEN,
    ODD,
    FeedbackEntanglement,
    MissingCoherencePairError,
    ParityShot,
    ParityShotBatch,
    ParityThreshold,
    PostselectedState,
    amplitude_damping,
    conditioned_parity_shot,
    conditioned_parity_shots,
    dephasing,
    feedback_entangle,
    feedback_phase,
    odd_frame_rotation,
    optimal_parity_threshold,
    parity_fidelity,
    postselect,
    unconditioned_parity_map,
)
from .metrics import (
    EntanglementMetrics,
    bell_fidelity,
    concurrence,
    ebit_efficiency,
    log_negativity,
    state_fidelity,
)
from .states import (
    PHI_PLUS,
    PSI_PLUS,
    BellTarget,
    InvalidDensityMatrixError,
    TwoQubitDensityMatrix,
    bell_state,
    psi0,
    werner,
)

__all__ = [
    "EVEN",
    "ODD",
    "PHI_PLUS",
    "PSI_PLUS",
    "BellTarget",
    "BetaCoefficients",
    "CavityConfig",
    "CoherenceFactor",
    "EntanglementMetrics",
    "FeedbackEntanglement",
    "InvalidDensityMatrixError",
    "MissingCoherencePairError",
    "ParityShot",
    "ParityShotBatch",
    "ParityThreshold",
    "PointerTrajectory",
    "PostselectedState",
    "SignalStats",
    "TwoQubitDensityMatrix",
    "amplitude_damping",
    "bell_fidelity",
    "bell_state",
    "beta_from_means",
    "coherence_factors",
    "concurrence",
    "conditioned_parity_shot",
    "conditioned_parity_shots",
    "dephasing",
    "ebit_efficiency",
    "evolve_pointer",
    "feedback_entangle",
    "feedback_phase",
    "log_negativity",
    "odd_frame_rotation",
    "optimal_parity_threshold",
    "parity_fidelity",
    "postselect",
    "psi0",
    "signal_stats",
    "state_fidelity",
    "unconditioned_parity_map",
    "werner",
]
