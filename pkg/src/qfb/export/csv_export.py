"""
CSV export for sweeps, histograms, trajectories and tomography records.

Floats are written with 17 significant digits so a file round-trips to the
same doubles, and rows are written in the order given, so identical results
produce byte-identical files.
"""

import csv
import logging
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import NDArray

from ..parity.cavity import PointerTrajectory
from ..parity.states import BASIS_LABELS
from ..tomography.records import MeasurementRecord

logger = logging.getLogger(__name__)

Row = Mapping[str, Any]

RECORD_COLUMNS = ("setting_id", "rotation_a", "rotation_b", "mean_v", "stderr_v")
HISTOGRAM_COLUMNS = ("bin_left", "bin_right", "count_prep0", "count_prep1")


def format_value(value: Any) -> str:
    """Text form of one cell: exact floats, lowercase booleans, empty for None."""
    if value is None:
        return ""
    if isinstance(value, bool | np.bool_):
        return "true" if value else "false"
    if isinstance(value, int | np.integer):
        return str(int(value))
    if isinstance(value, float | np.floating):
        return format(float(value), ".17g")
    return str(value)


def export_rows(path: Path, columns: Sequence[str], rows: Iterable[Row]) -> Path:
    """
    Write rows to a CSV file with a fixed column order.

    Args:
        path: Output file path
        columns: Header; every row must provide these keys
        rows: Row mappings

    Returns:
        The written path

    Raises:
        KeyError: If a row lacks one of the columns
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_value(row[c]) for c in columns])
            count += 1
    logger.debug("Wrote %s rows to %s", count, path)
    return path


def export_records(path: Path, records: Sequence[MeasurementRecord]) -> Path:
    """Tomography records, one row per setting."""
    rows = (
        {
            "setting_id": r.setting_id,
            "rotation_a": r.rotation_a,
            "rotation_b": r.rotation_b,
            "mean_v": r.mean_v,
            "stderr_v": r.stderr_v,
        }
        for r in records
    )
    return export_rows(path, RECORD_COLUMNS, rows)


def load_records(path: Path) -> list[MeasurementRecord]:
    """Read a records file written by export_records."""
    with open(path, encoding="utf-8", newline="") as f:
        return [
            MeasurementRecord(
                setting_id=int(row["setting_id"]),
                rotation_a=row["rotation_a"],
                rotation_b=row["rotation_b"],
                mean_v=float(row["mean_v"]),
                stderr_v=float(row["stderr_v"]),
            )
            for row in csv.DictReader(f)
        ]


def export_histogram(
    path: Path,
    edges: NDArray[np.float64],
    counts0: NDArray[np.int64],
    counts1: NDArray[np.int64],
) -> Path:
    """Voltage histograms of |0>- and |1>-prepared shots over shared bins."""
    rows = (
        {
            "bin_left": edges[k],
            "bin_right": edges[k + 1],
            "count_prep0": counts0[k],
            "count_prep1": counts1[k],
        }
        for k in range(len(counts0))
    )
    return export_rows(path, HISTOGRAM_COLUMNS, rows)


def trajectory_columns() -> list[str]:
    columns = ["t_us"]
    for label in BASIS_LABELS:
        columns += [f"re_a{label}", f"im_a{label}"]
    return columns


def export_trajectory(path: Path, traj: PointerTrajectory) -> Path:
    """Pointer amplitudes of the four basis states on the trajectory grid."""

    def rows() -> Iterable[Row]:
        for k, t in enumerate(traj.times):
            row: dict[str, Any] = {"t_us": t}
            for s, label in enumerate(BASIS_LABELS):
                row[f"re_a{label}"] = traj.alpha[s, k].real
                row[f"im_a{label}"] = traj.alpha[s, k].imag
            yield row

    return export_rows(path, trajectory_columns(), rows())
