"""Latency-aware digital feedback: loop timing, reset protocols and their error budget."""

from .engine import (
    RepeatedInitResult,
    ResetResult,
    apply_protocols,
    feedback_round,
    passive_populations,
    predict_reset_error,
    run_repeated_init,
    run_reset,
    theta_state,
)
from .timing import CONTROLLERS, ControllerProfile, FeedbackProtocol, LoopTiming, controller

__all__ = [
    "CONTROLLERS",
    "ControllerProfile",
    "FeedbackProtocol",
    "LoopTiming",
    "RepeatedInitResult",
    "ResetResult",
    "apply_protocols",
    "controller",
    "feedback_round",
    "passive_populations",
    "predict_reset_error",
    "run_repeated_init",
    "run_reset",
    "theta_state",
]
