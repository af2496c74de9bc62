"""
JSON export for density matrices and run summaries.

State files carry the 16 matrix entries row-major as [re, im] pairs and a
metrics block:

    {
        "label": "postselected",
        "basis": ["00", "01", "10", "11"],
        "entries": [[0.5, 0.0], [0.0, 0.0], ...],
        "metrics": {
            "concurrence": 0.71,
            "log_negativity": 0.78,
            "bell_fidelity": 0.85,
            "p_success": 0.5,
            "efficiency": 0.39
        }
    }
"""

import json
import logging
import math
from pathlib import Path
from typing import Any

import numpy as np

from ..parity.metrics import EntanglementMetrics
from ..parity.states import BASIS_LABELS, TwoQubitDensityMatrix

logger = logging.getLogger(__name__)


def _serialize_value(value: Any) -> Any:
    """Convert numpy scalars, arrays and paths to JSON-compatible values."""
    if isinstance(value, dict):
        return {str(k): _serialize_value(v) for k, v in value.items()}
    if isinstance(value, list | tuple):
        return [_serialize_value(v) for v in value]
    if isinstance(value, np.ndarray):
        return _serialize_value(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, float | np.floating):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return value.as_posix()
    return value


def _serialize_state(rho: TwoQubitDensityMatrix) -> list[list[float]]:
    """Row-major [re, im] pairs."""
    flat = rho.matrix.reshape(-1)
    return [[float(z.real), float(z.imag)] for z in flat]


def state_to_dict(
    rho: TwoQubitDensityMatrix,
    metrics: EntanglementMetrics | None = None,
    label: str | None = None,
    extra: dict[str, Any] | None = None,
) -> dict[str, Any]:
    data: dict[str, Any] = {}
    if label is not None:
        data["label"] = label
    data["basis"] = list(BASIS_LABELS)
    data["entries"] = _serialize_state(rho)
    data["metrics"] = (metrics or EntanglementMetrics.of(rho)).to_dict()
    if extra:
        data.update(_serialize_value(extra))
    return data


def state_from_dict(data: dict[str, Any]) -> TwoQubitDensityMatrix:
    """
    Rebuild a density matrix from its exported form.

    Raises:
        ValueError: If the entry list does not hold 16 pairs
        InvalidDensityMatrixError: If the matrix is not a valid state
    """
    entries = np.asarray(data["entries"], dtype=float)
    if entries.shape != (16, 2):
        raise ValueError(f"expected 16 [re, im] pairs, got shape {entries.shape}")
    return TwoQubitDensityMatrix((entries[:, 0] + 1j * entries[:, 1]).reshape(4, 4))


def write_json(path: Path, data: dict[str, Any], pretty: bool = True) -> Path:
    """Write JSON deterministically: fixed key order from the dict, exact float repr."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(_serialize_value(data), f, indent=2 if pretty else None, ensure_ascii=False)
        f.write("\n")
    logger.debug("Wrote %s", path)
    return path


def export_state(
    path: Path,
    rho: TwoQubitDensityMatrix,
    metrics: EntanglementMetrics | None = None,
    label: str | None = None,
    extra: dict[str, Any] | None = None,
) -> Path:
    """
    Export one state with its metrics block.

    Args:
        path: Output file path
        rho: State to export
        metrics: Metrics to attach; computed with p_success = 1 if omitted
        label: Optional label stored with the state
        extra: Additional top-level fields
    """
    return write_json(path, state_to_dict(rho, metrics, label, extra))


def load_state(path: Path) -> TwoQubitDensityMatrix:
    with open(path, encoding="utf-8") as f:
        return state_from_dict(json.load(f))
