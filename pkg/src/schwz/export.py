"""Deterministic CSV/JSON tables and PPM renderings.

Floats are written with 17 significant digits and a bare exponent
(``1.0000000000000000e-1``); formatting never consults the locale.
"""

from __future__ import annotations

import json
import math
from dataclasses import fields, is_dataclass
from pathlib import Path

import numpy as np

from .escape import GreenGrid, Region, green_grid
from .levels import AnnulusRecord, LevelComponent, level_components
from .metric import ConvergenceRow
from .poly import Poly

HEADERS = {
    ConvergenceRow: ("n", "sup_error", "l_half_error"),
    AnnulusRecord: ("level", "height", "circumference", "local_degree"),
    LevelComponent: ("level", "circumference_do", "local_degree", "enclosed_critical", "vertex_count"),
}
GRID_HEADER = ("x", "y", "green", "dgreen_re", "dgreen_im", "escaped", "iterations")

# banded palette stops (RGB); interpolated with integer arithmetic
_STOPS = ((32, 44, 112), (92, 170, 205), (250, 236, 180), (214, 104, 46), (32, 44, 112))


def format_float(x: float) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    mant, exp = ("%.16e" % x).split("e")
    return f"{mant}e{int(exp)}"


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (tuple, list)):
        return " ".join(_cell(x) for x in v)
    return format_float(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (tuple, list)):
        return [_json_value(x) for x in v]
    v = float(v)
    # strict JSON has no infinities; use the CSV tokens
    return v if math.isfinite(v) else format_float(v)


def _records(rows):
    """(header, list of value tuples) for any supported row source."""
    if isinstance(rows, GreenGrid):
        X = rows.region.nodes()
        data = [
            (z.real, z.imag, rows.green[i, j], rows.dgreen[i, j].real, rows.dgreen[i, j].imag, bool(rows.escaped[i, j]), int(rows.iterations[i, j]))
            for i in range(X.shape[0])
            for j, z in enumerate(X[i])
        ]
        return GRID_HEADER, data
    rows = list(rows)
    if not rows:
        return None, []
    kind = type(rows[0])
    header = HEADERS.get(kind)
    if header is None:
        if not is_dataclass(rows[0]):
            raise TypeError(f"cannot export rows of type {kind.__name__}")
        header = tuple(f.name for f in fields(rows[0]))
    data = []
    for r in rows:
        if isinstance(r, LevelComponent):
            data.append((r.level, r.circumference_do, r.local_degree, r.enclosed_critical, r.vertices.vertices.size))
        else:
            data.append(tuple(getattr(r, h) for h in header))
    return header, data


def table_text(rows, fmt: str = "csv", header=None) -> str:
    h, data = _records(rows)
    header = h or header or HEADERS[ConvergenceRow]
    if fmt == "csv":
        lines = [",".join(header)]
        lines += [",".join(_cell(v) for v in row) for row in data]
        return "\n".join(lines) + "\n"
    if fmt == "json":
        objs = [{k: _json_value(v) for k, v in zip(header, row)} for row in data]
        return json.dumps(objs, indent=2, allow_nan=False) + "\n"
    raise ValueError(f"unknown table format {fmt!r}")


def export_table(rows, fmt: str = "csv", out=None, header=None) -> str:
    """Render ``rows`` as CSV or JSON; write to ``out`` when given."""
    text = table_text(rows, fmt, header)
    if out is not None:
        with open(out, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
    return text


def _palette():
    out = np.zeros((256, 3), dtype=np.uint8)
    seg = 256 // (len(_STOPS) - 1)
    for k in range(len(_STOPS) - 1):
        a, b = np.array(_STOPS[k]), np.array(_STOPS[k + 1])
        for s in range(seg):
            out[k * seg + s] = (a * (seg - s) + b * s) // seg
    return out


def green_image(f: Poly, region: Region, bands: int = 8, levels=(), workers: int = 1) -> np.ndarray:
    """RGB array of shape (ny, nx, 3); row 0 is the top edge (y_max).

    Non-escaping pixels, and escaping pixels that may lie within half a
    cell diagonal of the filled Julia set by the distance bound, are black.
    """
    if bands < 1:
        raise ValueError("bands must be >= 1")
    grid = green_grid(f, region, workers=workers)
    img = np.zeros(grid.shape + (3,), dtype=np.uint8)
    # G / (2 |grad G|) = G / (4|g|) bounds the distance to the filled Julia
    # set from below (small G); a cell that may contain a point of it is
    # drawn black, which keeps a Cantor Julia set visible
    with np.errstate(divide="ignore", invalid="ignore"):
        near = grid.green / (4 * np.abs(grid.dgreen)) < 0.5 * math.hypot(region.hx, region.hy)
    esc = grid.escaped & ~near
    with np.errstate(divide="ignore"):
        t = bands * np.log(grid.green[esc]) / math.log(f.degree)
    idx = np.floor((t - np.floor(t)) * 256).astype(np.int64).clip(0, 255)
    img[esc] = _palette()[idx]
    for lv in levels:
        for comp in level_components(f, lv, region, workers=workers):
            v = comp.vertices.vertices
            j = np.rint((v.real - region.x_min) / region.hx).astype(np.int64)
            i = np.rint((v.imag - region.y_min) / region.hy).astype(np.int64)
            ok = (j >= 0) & (j < region.nx) & (i >= 0) & (i < region.ny)
            img[i[ok], j[ok]] = 255
    return img[::-1]


def ppm_bytes(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return b"P6\n%d %d\n255\n" % (w, h) + np.ascontiguousarray(img, dtype=np.uint8).tobytes()


def render_green_ppm(f: Poly, region: Region, bands: int, out, levels=(), workers: int = 1) -> None:
    """Write the banded escape-rate picture as a binary PPM."""
    Path(out).write_bytes(ppm_bytes(green_image(f, region, bands, levels, workers)))


def read_ppm(path):
    """Parse a P6 file written by :func:`render_green_ppm` into an array."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6" or parts[2] != b"255":
        raise ValueError("not a maxval-255 P6 file")
    w, h = map(int, parts[1].split())
    body = parts[3]
    if len(body) != 3 * w * h:
        raise ValueError("pixel data length does not match header")
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w, 3)
