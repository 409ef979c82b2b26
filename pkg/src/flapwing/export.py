"""Deterministic file output.

Numbers are written with ``%.17g`` so every double survives a round trip;
JSON documents use sorted keys. Identical inputs give identical bytes.
"""
import json
from pathlib import Path

import numpy as np

from .errors import ExportError
from .simulator import ForceRecord

RECORD_COLUMNS = ("t_s", "lift_N", "drag_N", "side_N", "fx_N", "fy_N", "fz_N",
                  "mx_Nm", "my_Nm", "mz_Nm", "shoulder_rad", "elbow_rad",
                  "shoulder_rate_rad_s", "elbow_rate_rad_s", "constraint_residual",
                  "loop_residual_m")
WAKE_COLUMNS = ("x_m", "y_m", "z_m", "vx_m_s", "vy_m_s", "vz_m_s", "curl_1_s")


def _fmt(rows):
    return "".join(",".join(f"{v:.17g}" for v in row) + "\n" for row in rows)


def _write(path, text):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as err:
        raise ExportError(f"cannot write {path}: {err.strerror or err}") from None
    return path


def _read(path):
    path = Path(path)
    try:
        return path.read_text()
    except OSError as err:
        raise ExportError(f"cannot read {path}: {err.strerror or err}") from None


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    return obj


def dumps(obj):
    return json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=True) + "\n"


def record_table(record):
    return np.column_stack([record.t, record.lift, record.drag, record.side, record.force,
                            record.moment, record.gait, record.constraint_residual,
                            record.loop_residual])


def write_record(record, out_dir, prefix="forces"):
    """Write ``<prefix>.csv``, ``<prefix>_gamma.csv``, ``<prefix>_zeta.csv`` and ``<prefix>_meta.json``.

    Returns the list of written paths.
    """
    out = Path(out_dir)
    k = record.gamma.shape[1] if record.gamma.ndim == 2 else 0
    paths = [
        _write(out / f"{prefix}.csv", ",".join(RECORD_COLUMNS) + "\n" + _fmt(record_table(record))),
        _write(out / f"{prefix}_gamma.csv",
               ",".join(["t_s"] + [f"gamma_{i}_m2_s" for i in range(k)]) + "\n"
               + _fmt(np.column_stack([record.t, record.gamma]))),
        _write(out / f"{prefix}_zeta.csv",
               ",".join(["t_s"] + [f"zeta_{i}" for i in range(record.zeta.shape[1])]) + "\n"
               + _fmt(np.column_stack([record.zeta_t, record.zeta]))),
        _write(out / f"{prefix}_meta.json", dumps(record.meta)),
    ]
    return paths


def _table(path, columns=None):
    text = _read(path)
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    if columns is not None and tuple(header) != tuple(columns):
        raise ExportError(f"{path}: unexpected columns {header}")
    body = "\n".join(lines[1:])
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]]) if body else \
        np.zeros((0, len(header)))
    return header, data


def read_record(out_dir, prefix="forces"):
    """Rebuild a :class:`ForceRecord` (without strip end points) from :func:`write_record` output."""
    out = Path(out_dir)
    _, d = _table(out / f"{prefix}.csv", RECORD_COLUMNS)
    _, g = _table(out / f"{prefix}_gamma.csv")
    _, z = _table(out / f"{prefix}_zeta.csv")
    meta = json.loads(_read(out / f"{prefix}_meta.json"))
    n = len(d)
    return ForceRecord(t=d[:, 0], force=d[:, 4:7], moment=d[:, 7:10], cl=np.zeros((n, g.shape[1] - 1)),
                       gamma=g[:, 1:], edges=np.zeros((n, g.shape[1] - 1, 2, 3)), gait=d[:, 10:14],
                       constraint_residual=d[:, 14], loop_residual=d[:, 15],
                       zeta_t=z[:, 0], zeta=z[:, 1:], meta=meta)


def write_report(report, path):
    """Comparison report as a sorted-key JSON document."""
    return _write(path, dumps(report.to_dict() if hasattr(report, "to_dict") else report))


def write_cycle_csv(report, path):
    rows = np.column_stack([report.cycle_phase, report.cycle_model["lift"], report.cycle_measured["lift"],
                            report.cycle_model["drag"], report.cycle_measured["drag"]])
    return _write(path, "phase,model_lift_N,measured_lift_N,model_drag_N,measured_drag_N\n" + _fmt(rows))


def grid_metadata(grid):
    p = grid.plane
    return {"plane": {"normal": [1.0, 0.0, 0.0], "x_m": p.x, "y_range_m": list(p.y_range),
                      "z_range_m": list(p.z_range), "ny": p.ny, "nz": p.nz},
            "t_s": grid.t, "core_m": grid.core,
            "units": {"position": "m", "velocity": "m/s", "curl": "1/s"},
            "columns": list(WAKE_COLUMNS)}


def write_wake_grid(grid, path, extra=None):
    """Wake grid CSV: one ``# {json}`` metadata line, a header, then ``ny * nz`` rows."""
    meta = grid_metadata(grid)
    if extra:
        meta.update(_jsonable(extra))
    pts = grid.plane.nodes()
    rows = np.column_stack([pts, grid.vel.reshape(-1, 3), grid.curl.reshape(-1)])
    head = "# " + json.dumps(_jsonable(meta), sort_keys=True) + "\n" + ",".join(WAKE_COLUMNS) + "\n"
    return _write(path, head + _fmt(rows))


def read_wake_grid(path):
    """Return ``(metadata, rows)`` of a wake grid CSV."""
    text = _read(path)
    first = text.split("\n", 1)[0]
    if not first.startswith("# "):
        raise ExportError(f"{path}: missing metadata line")
    _, rows = _table(path, WAKE_COLUMNS)
    return json.loads(first[2:]), rows
