"""
Experiment runner: validation, seeding, artifact writing and the run manifest.
"""

import hashlib
import logging
from dataclasses import asdict, dataclass, field
from datetime import UTC, datetime
from pathlib import Path
from typing import Any

from .. import __version__
from ..config import ExperimentConfig, config_hash
from ..export.json_export import write_json
from ..utils.logging import StructuredLogger, run_log
from ..utils.pool import BatchPool
from .registry import RunContext, get_experiment

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


class NonConvergenceError(RuntimeError):
    """Raised when a numerical step required by the experiment did not converge."""


@dataclass
class RunManifest:
    """Provenance of one run; not part of the byte-compared artifacts."""

    experiment: str
    config_hash: str
    seed: int
    version: str
    started_at: str
    finished_at: str = ""
    files: list[dict[str, str]] = field(default_factory=list)

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


def file_sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _now() -> str:
    return datetime.now(UTC).isoformat(timespec="seconds")


def validate_for(name: str, config: ExperimentConfig) -> None:
    """
    Check that a config can drive the named experiment.

    Raises:
        UnknownExperimentError: If the name is not registered
        ValueError: If the config names another experiment or lacks a block
    """
    experiment = get_experiment(name)
    if config.run.experiment is not None and config.run.experiment != name:
        raise ValueError(
            f"Invalid configuration: file is for '{config.run.experiment}', not '{name}'"
        )
    missing = config.missing(experiment.blocks)
    if missing:
        blocks = ", ".join(f"[{b}]" for b in missing)
        raise ValueError(f"Invalid configuration: '{name}' requires {blocks}")


def run_experiment(name: str, config: ExperimentConfig) -> RunManifest:
    """
    Run one experiment and write its artifacts plus manifest.json.

    Args:
        name: Registered experiment name
        config: Validated configuration, overrides already applied

    Returns:
        RunManifest of the completed run

    Raises:
        UnknownExperimentError: If the name is not registered
        ValueError: If the config is not suitable for the experiment
        NonConvergenceError: If a required numerical step failed to converge
    """
    validate_for(name, config)
    experiment = get_experiment(name)
    run = config.run

    out_dir = run.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)

    manifest = RunManifest(
        experiment=name,
        config_hash=config_hash(config),
        seed=run.seed,
        version=__version__,
        started_at=_now(),
    )
    log = StructuredLogger("qfb.experiments", experiment=name, seed=run.seed)
    ctx = RunContext(
        name=name,
        config=config,
        out_dir=out_dir,
        pool=BatchPool(threads=run.threads, batch_size=run.batch_size),
        log=log,
    )

    with run_log(out_dir):
        log.info("Starting (%s threads, batch size %s)", ctx.pool.threads, run.batch_size)
        try:
            experiment.fn(ctx)
        finally:
            manifest.finished_at = _now()
            manifest.files = [
                {"path": path.relative_to(out_dir).as_posix(), "sha256": file_sha256(path)}
                for path in ctx.files
            ]
            write_json(out_dir / MANIFEST_NAME, manifest.to_dict())

        log.info("Finished: %s artifacts in %s", len(ctx.files), out_dir)
    return manifest
