"""
CSV and JSON output.

Floats are written with 17 significant digits so every double survives a
round trip. Files are written to a temporary sibling and moved into place,
so a failed run never leaves a truncated output behind.
"""
import csv
import json
import math
import os
import tempfile
from typing import Any, Dict, Iterable, List, Optional, Sequence

from src.models.spectrum_slice import Regime
from src.models.sweep_result import PointStatus, SweepGrid, SweepPoint, TfFlag

SWEEP_COLUMNS = [
    "x0_over_g", "omega_c_over_x0", "x0_over_omega_c", "x0", "omega_c",
    "delta", "regime", "tf_opt", "infidelity", "purity", "status",
]
PARTIAL_COLUMNS = [
    "row", "col", "x0", "omega_c", "delta", "regime", "tf_opt",
    "infidelity", "purity", "status", "flag", "message",
]


def format_value(value: Any) -> str:
    """Deterministic text form; floats use 17 significant digits."""
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


def _atomic_write(path: str, write) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    handle = tempfile.NamedTemporaryFile(
        "w", dir=directory, prefix=".tmp-", suffix=os.path.basename(path),
        delete=False, newline=""
    )
    try:
        with handle:
            write(handle)
        os.replace(handle.name, path)
    except BaseException:
        if os.path.exists(handle.name):
            os.remove(handle.name)
        raise


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    """Write a CSV file atomically."""
    def write(handle) -> None:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(value) for value in row])

    _atomic_write(path, write)


def write_json(path: str, payload: Dict[str, Any]) -> None:
    """Write a JSON document atomically (sorted keys, NaN/inf as null)."""
    def write(handle) -> None:
        json.dump(_json_safe(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")

    _atomic_write(path, write)


def _json_safe(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def read_csv(path: str) -> List[Dict[str, str]]:
    """Rows of a CSV file as dicts."""
    with open(path, "r", newline="") as handle:
        return list(csv.DictReader(handle))


def append_csv_row(path: str, header: Sequence[str], row: Sequence[Any]) -> None:
    """Append one row, writing the header first when the file is new."""
    is_new = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if is_new:
            writer.writerow(header)
        writer.writerow([format_value(value) for value in row])
        handle.flush()


def sweep_row(grid: SweepGrid, point: SweepPoint) -> List[Any]:
    """Final sweep CSV row of a point (SWEEP_COLUMNS order)."""
    x0_over_g = grid.x0_over_g[point.row]
    ratio = grid.omega_c_over_x0[point.col]
    return [
        x0_over_g,
        ratio,
        1.0 / ratio if ratio > 0 else math.inf,
        point.x0,
        point.omega_c,
        point.delta,
        point.regime.value if point.regime else "",
        point.t_f_opt,
        point.infidelity,
        point.purity_bar,
        point.status.value,
    ]


def partial_row(point: SweepPoint) -> List[Any]:
    """Resume-file row of a point (PARTIAL_COLUMNS order)."""
    return [
        point.row,
        point.col,
        point.x0,
        point.omega_c,
        point.delta,
        point.regime.value if point.regime else "",
        point.t_f_opt,
        point.infidelity,
        point.purity_bar,
        point.status.value,
        point.flag.value if point.flag else "",
        point.message,
    ]


def point_from_partial(row: Dict[str, str]) -> SweepPoint:
    """Inverse of partial_row."""
    def optional_enum(enum, text: str) -> Optional[Any]:
        return enum(text) if text else None

    return SweepPoint(
        row=int(row["row"]),
        col=int(row["col"]),
        x0=float(row["x0"]),
        omega_c=float(row["omega_c"]),
        delta=float(row["delta"]),
        regime=optional_enum(Regime, row["regime"]),
        t_f_opt=float(row["tf_opt"]),
        infidelity=float(row["infidelity"]),
        purity_bar=float(row["purity"]),
        status=PointStatus(row["status"]),
        flag=optional_enum(TfFlag, row["flag"]),
        message=row["message"]
    )
