"""Shared fixtures: the shipped experiment configs, shrunk for fast runs."""

from collections.abc import Callable
from pathlib import Path
from typing import Any

import pytest

from qfb.config import ExperimentConfig, load_config

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

Configured = Callable[..., ExperimentConfig]


@pytest.fixture
def configs_dir() -> Path:
    return CONFIGS


@pytest.fixture
def configured(tmp_path: Path) -> Configured:
    """
    Load configs/<name>.toml with a temporary out_dir and block overrides.

    Example:
        cfg = configured("reset_sweep", n_shots=2000, reset_sweep={"n_theta": 3})
    """

    def build(
        name: str, n_shots: int = 2000, threads: int = 2, **blocks: dict[str, Any]
    ) -> ExperimentConfig:
        cfg = load_config(CONFIGS / f"{name}.toml")
        run = cfg.run.model_copy(
            update={"n_shots": n_shots, "out_dir": tmp_path / name, "threads": threads}
        )
        updates: dict[str, Any] = {"run": run}
        for block, values in blocks.items():
            updates[block] = getattr(cfg, block).model_copy(update=values)
        return cfg.model_copy(update=updates)

    return build
