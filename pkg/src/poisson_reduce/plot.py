"""
Static SVG of a trajectory CSV: the Poisson-vector path on an orthographic
view of the sphere plus drift sparklines. Output bytes depend only on the
CSV contents.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import SchemaError
from .output import atomic_write

VIEW = np.array([1.0, 1.0, 1.0]) / np.sqrt(3.0)
CLOSE_TOL = 1e-6
SIZE = 240.0
SPARK_W, SPARK_H = 220.0, 60.0


def _basis():
    up = np.array([0.0, 0.0, 1.0])
    u = np.cross(up, VIEW)
    u /= np.linalg.norm(u)
    return u, np.cross(VIEW, u)


def read_csv(path) -> dict:
    """Columns of a trajectory CSV as float arrays (``chart_id`` kept as strings)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except UnicodeDecodeError as exc:
        raise SchemaError(f"{path}: not a text CSV") from exc
    if not rows:
        raise SchemaError(f"{path}: empty file")
    header, body = rows[0], rows[1:]
    for col in ("t", "a1", "a2", "a3"):
        if col not in header:
            raise SchemaError(f"{path}: missing column {col!r}")
    if not body:
        raise SchemaError(f"{path}: no data rows")
    out = {}
    for j, name in enumerate(header):
        vals = []
        for i, r in enumerate(body, start=2):
            if len(r) != len(header):
                raise SchemaError(f"{path}: line {i} has {len(r)} fields, expected {len(header)}")
            vals.append(r[j])
        if name == "chart_id":
            out[name] = vals
            continue
        try:
            out[name] = np.array([float(v) if v != "" else np.nan for v in vals])
        except ValueError as exc:
            raise SchemaError(f"{path}: column {name!r}: {exc}") from exc
    return out


def _num(x: float) -> str:
    s = f"{x:.3f}"
    return "0.000" if s == "-0.000" else s


def _sparkline(values, x0, y0, label):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if len(v) < 2:
        return []
    d = v - v[0]
    span = float(np.abs(d).max()) or 1.0
    xs = x0 + SPARK_W * np.arange(len(d)) / (len(d) - 1)
    ys = y0 + SPARK_H / 2 - (SPARK_H / 2) * d / span
    # at most ~400 vertices; take every stride-th sample
    stride = max(1, len(d) // 400)
    pts = " ".join(f"{_num(x)},{_num(y)}" for x, y in zip(xs[::stride], ys[::stride]))
    return [f'<text x="{_num(x0)}" y="{_num(y0 - 4)}" font-size="10">{label} drift, '
            f'max {span:.3e}</text>',
            f'<polyline fill="none" stroke="#555" stroke-width="1" points="{pts}"/>']


def render_svg(data: dict) -> str:
    nu = np.stack([data["a1"], data["a2"], data["a3"]], axis=1)
    u, v = _basis()
    r = SIZE / 2 - 10
    cx = cy = SIZE / 2
    px = cx + r * (nu @ u)
    py = cy - r * (nu @ v)
    front = (nu @ VIEW) >= 0
    stride = max(1, len(nu) // 2000)
    idx = list(range(0, len(nu), stride))
    if idx[-1] != len(nu) - 1:
        idx.append(len(nu) - 1)
    closed = len(nu) > 2 and float(np.linalg.norm(nu[-1] - nu[0])) <= CLOSE_TOL
    if closed:
        idx = idx[:-1]
    d = "M" + " L".join(f"{_num(px[i])} {_num(py[i])}" for i in idx) + (" Z" if closed else "")
    height = SIZE + 2 * (SPARK_H + 30)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{_num(SIZE)}" '
             f'height="{_num(height)}" viewBox="0 0 {_num(SIZE)} {_num(height)}">',
             f'<circle cx="{_num(cx)}" cy="{_num(cy)}" r="{_num(r)}" fill="none" stroke="#bbb"/>',
             f'<path d="{d}" fill="none" stroke="#1f4e9a" stroke-width="1"'
             f' data-front-fraction="{front.mean():.3f}"/>']
    sparks = [("E", "E"), ("J", "J")] if "E" in data else [("Ered", "E")]
    y0 = SIZE + 30
    for col, label in sparks:
        if col in data:
            parts += _sparkline(data[col], 10.0, y0, label)
            y0 += SPARK_H + 30
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def plot(csv_path, svg_path):
    """Render ``csv_path`` to ``svg_path`` (atomic write)."""
    atomic_write(Path(svg_path), render_svg(read_csv(csv_path)))
