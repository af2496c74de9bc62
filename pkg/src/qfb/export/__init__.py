"""Export of experiment artifacts: CSV sweeps and JSON states."""

from .csv_export import (
    export_histogram,
    export_records,
    export_rows,
    export_trajectory,
    format_value,
    load_records,
)
from .json_export import export_state, load_state, state_from_dict, state_to_dict, write_json

__all__ = [
    "export_histogram",
    "export_records",
    "export_rows",
    "export_state",
    "export_trajectory",
    "format_value",
    "load_records",
    "load_state",
    "state_from_dict",
    "state_to_dict",
    "write_json",
]
