"""Plain CSV / JSON artifacts.

CSV files use '.' decimals, LF line endings and ``repr``-exact floats; JSON is
written with sorted keys and NaN/inf mapped to null, so identical inputs give
byte-identical files.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "jsonable", "write_json", "read_json", "write_csv", "read_csv", "profile_rows",
    "write_profile", "write_dcurve", "write_trajectory",
]


def jsonable(obj):
    """Recursively convert numpy scalars/arrays, tuples and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    text = json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text + "\n")
    return path


def read_json(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return repr(x) if math.isfinite(x) else "nan"
    return str(x)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(header)
        for row in rows:
            wr.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[list, np.ndarray]:
    """(header, float array of rows); 'nan' entries become NaN."""
    with open(path, encoding="utf-8", newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        data = [[float(x) for x in row] for row in rd]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def profile_rows(prof):
    dphi = prof.dphi_domega if prof.dphi_domega is not None else np.full_like(prof.phi, np.nan)
    return zip(prof.grid.r, prof.phi, dphi)


def write_profile(stem, prof, extra: dict | None = None) -> tuple[Path, Path]:
    """``<stem>.csv`` with r, phi, dphi_domega and a JSON sidecar."""
    stem = Path(stem)
    c = write_csv(stem.with_suffix(".csv"), ("r", "phi", "dphi_domega"), profile_rows(prof))
    meta = {"model": prof.model.params(), "omega": prof.omega, "grid": prof.grid.to_dict(),
            "residual": prof.residual, "amplitude": prof.amplitude, "l2sq": prof.l2sq()}
    meta.update(extra or {})
    j = write_json(stem.with_suffix(".json"), meta)
    return c, j


def write_dcurve(path, table) -> Path:
    return write_csv(path, table.COLUMNS, table.rows())


def write_trajectory(path, log) -> Path:
    return write_csv(path, log.COLUMNS, log.rows())
