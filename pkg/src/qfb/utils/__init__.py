"""Utility functions and helpers."""

from .logging import StructuredLogger, run_log, setup_logging
from .pool import Batch, BatchPool
from .rng import stream

__all__ = ["Batch", "BatchPool", "StructuredLogger", "run_log", "setup_logging", "stream"]
