"""
Experiment registry and the per-run context handed to experiments.

Experiments register under their CLI name together with the config blocks
they need. The context owns the output directory, the batch pool and the
list of written artifacts; all writes go through it from the calling thread.
"""

import logging
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, TypeVar

import numpy as np
from numpy.typing import NDArray

from ..config import ExperimentConfig
from ..export.csv_export import (
    Row,
    export_histogram,
    export_records,
    export_rows,
    export_trajectory,
)
from ..export.json_export import export_state, write_json
from ..parity.cavity import PointerTrajectory
from ..parity.metrics import EntanglementMetrics
from ..parity.states import TwoQubitDensityMatrix
from ..tomography.records import MeasurementRecord
from ..utils.logging import StructuredLogger
from ..utils.pool import Batch, BatchPool
from ..utils.rng import stream

logger = logging.getLogger(__name__)

T = TypeVar("T")


class UnknownExperimentError(ValueError):
    """Raised when no experiment is registered under a name."""


@dataclass
class RunContext:
    """Everything an experiment needs to run and persist its results."""

    name: str
    config: ExperimentConfig
    out_dir: Path
    pool: BatchPool
    log: StructuredLogger
    files: list[Path] = field(default_factory=list)

    @property
    def seed(self) -> int:
        return self.config.run.seed

    @property
    def n_shots(self) -> int:
        return self.config.run.n_shots

    def tag(self, stage: str) -> str:
        return f"{self.name}/{stage}"

    def stream(self, stage: str, index: int = 0) -> np.random.Generator:
        """Dedicated generator for a serial stage."""
        return stream(self.seed, self.tag(stage), index)

    def map(
        self,
        work: Callable[[Batch, np.random.Generator], T],
        n_items: int,
        stage: str,
        batch_size: int | None = None,
    ) -> list[T]:
        """Run work over n_items in seeded batches; results in batch order."""
        pool = self.pool
        if batch_size is not None and batch_size != pool.batch_size:
            pool = BatchPool(threads=pool.threads, batch_size=batch_size)
        return pool.map(work, n_items, self.seed, self.tag(stage))

    def _record(self, path: Path) -> Path:
        self.files.append(path)
        self.log.debug("Wrote %s", path.name)
        return path

    def write_rows(self, filename: str, columns: Sequence[str], rows: Iterable[Row]) -> Path:
        return self._record(export_rows(self.out_dir / filename, columns, rows))

    def write_histogram(
        self,
        filename: str,
        edges: NDArray[np.float64],
        counts0: NDArray[np.int64],
        counts1: NDArray[np.int64],
    ) -> Path:
        return self._record(export_histogram(self.out_dir / filename, edges, counts0, counts1))

    def write_trajectory(self, filename: str, traj: PointerTrajectory) -> Path:
        return self._record(export_trajectory(self.out_dir / filename, traj))

    def write_records(self, filename: str, records: Sequence[MeasurementRecord]) -> Path:
        return self._record(export_records(self.out_dir / filename, records))

    def write_json(self, filename: str, data: dict[str, Any]) -> Path:
        return self._record(write_json(self.out_dir / filename, data))

    def write_state(
        self,
        filename: str,
        rho: TwoQubitDensityMatrix,
        metrics: EntanglementMetrics | None = None,
        label: str | None = None,
        extra: dict[str, Any] | None = None,
    ) -> Path:
        return self._record(export_state(self.out_dir / filename, rho, metrics, label, extra))


ExperimentFn = Callable[[RunContext], None]


@dataclass(frozen=True)
class Experiment:
    """A named experiment and the config blocks it requires."""

    name: str
    description: str
    blocks: tuple[str, ...]
    fn: ExperimentFn


EXPERIMENTS: dict[str, Experiment] = {}


def register(
    name: str, description: str, blocks: Sequence[str]
) -> Callable[[ExperimentFn], ExperimentFn]:
    """Decorator adding an experiment function to the registry."""

    def decorator(fn: ExperimentFn) -> ExperimentFn:
        if name in EXPERIMENTS:
            raise ValueError(f"experiment '{name}' is already registered")
        EXPERIMENTS[name] = Experiment(name, description, tuple(blocks), fn)
        return fn

    return decorator


def experiment_names() -> list[str]:
    return sorted(EXPERIMENTS)


def get_experiment(name: str) -> Experiment:
    """
    Look up an experiment by CLI name.

    Raises:
        UnknownExperimentError: With the list of valid names
    """
    try:
        return EXPERIMENTS[name]
    except KeyError:
        valid = ", ".join(experiment_names())
        raise UnknownExperimentError(
            f"Unknown experiment '{name}'. Valid experiments: {valid}"
        ) from None
