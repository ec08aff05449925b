"""CSV trajectories and drift reports, written atomically."""
from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

FULL_COLUMNS = ("t", "a1", "a2", "a3", "w1", "w2", "w3", "E", "J", "unit_res", "ortho_res")
REDUCED_COLUMNS = ("t", "a1", "a2", "a3", "Ered", "chart_id", "kg")


def atomic_write(path, data: str):
    """Write ``data`` next to ``path`` and rename over it; no partial file is ever visible."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def fmt(x) -> str:
    """Shortest round-trip decimal (``repr``) for floats; locale-free."""
    if isinstance(x, str):
        return x
    x = float(x)
    if x != x:
        return "nan"
    return repr(x)


def csv_text(columns: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


@dataclass
class DriftReport:
    max_rel_energy_drift: float
    mean_rel_energy_drift: float
    max_momentum_drift: float
    max_unit_residual: float
    max_ortho_residual: float
    chart_switches: int
    wall_time: float
    samples: int
    closure_error: float
    min_kg: Optional[float] = None
    max_kg: Optional[float] = None

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def relative_drift(values) -> tuple:
    """``(max, mean)`` of ``|E - E0| / |E0|`` (absolute when ``E0 == 0``)."""
    v = np.asarray(values, dtype=float)
    scale = abs(v[0]) if v[0] != 0 else 1.0
    d = np.abs(v - v[0]) / scale
    return float(d.max()), float(d.mean())
