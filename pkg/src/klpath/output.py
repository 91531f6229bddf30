"""File emitters: path CSV and SVG, series CSV, histogram CSV, report JSON.

Floats are serialized with 17 significant digits so doubles round-trip and
repeated runs are byte-identical.
"""
from __future__ import annotations

import json
import math
from pathlib import Path
from typing import IO, Iterable

from .kloosterman import PathPoint
from .stats import ExperimentReport, _jsonable


def format_float(v: float) -> str:
    return format(float(v), ".17g")


def config_comment(config: dict) -> str:
    """One-line replay header: the fully resolved configuration."""
    return "# config: " + json.dumps(_jsonable(config), sort_keys=True)


def write_path_csv(points: Iterable[PathPoint], fh: IO[str], config: dict | None = None) -> None:
    """Columns j,x,re,im; one row per path vertex."""
    if config is not None:
        fh.write(config_comment(config) + "\n")
    fh.write("j,x,re,im\n")
    for pt in points:
        fh.write(
            f"{pt.j},{pt.x},{format_float(pt.value.real)},{format_float(pt.value.imag)}\n"
        )


def path_svg_document(points: list[PathPoint], config: dict | None = None) -> str:
    """Single-polyline SVG with an auto-fitted viewBox.

    Stroke width is 0.5% of the bounding-box diagonal; the vertical axis is
    flipped so the positive imaginary direction points up.
    """
    xs = [pt.value.real for pt in points]
    ys = [-pt.value.imag for pt in points]
    min_x, max_x = min(xs), max(xs)
    min_y, max_y = min(ys), max(ys)
    width = max(max_x - min_x, 1e-12)
    height = max(max_y - min_y, 1e-12)
    pad_x, pad_y = 0.05 * width, 0.05 * height
    stroke = 0.005 * math.hypot(width, height)
    view = (
        f"{format_float(min_x - pad_x)} {format_float(min_y - pad_y)} "
        f"{format_float(width + 2 * pad_x)} {format_float(height + 2 * pad_y)}"
    )
    coords = " ".join(
        f"{format_float(x)},{format_float(y)}" for x, y in zip(xs, ys)
    )
    comment = f"<!-- {config_comment(config)[2:]} -->\n" if config is not None else ""
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="{view}">\n'
        + comment
        + f'<polyline fill="none" stroke="black" stroke-width="{format_float(stroke)}" '
        + f'points="{coords}"/>\n</svg>\n'
    )


def write_path_svg(points: list[PathPoint], target: str | Path, config: dict | None = None) -> None:
    Path(target).write_text(path_svg_document(points, config))


def write_series_csv(grid, paths, fh: IO[str], config: dict | None = None) -> None:
    """Columns sample,t,re,im; the header comment embeds seed/H/N."""
    if config is not None:
        fh.write(config_comment(config) + "\n")
    fh.write("sample,t,re,im\n")
    for i in range(paths.shape[0]):
        row = paths[i]
        for t, z in zip(grid, row):
            fh.write(
                f"{i},{format_float(t)},{format_float(z.real)},{format_float(z.imag)}\n"
            )


def write_histogram_csv(values, fh: IO[str], bins: int = 81, config: dict | None = None) -> None:
    """Binned histogram with columns value,count (value = bin center)."""
    import numpy as np

    counts, edges = np.histogram(np.asarray(values, dtype=float), bins=bins)
    centers = (edges[:-1] + edges[1:]) / 2.0
    if config is not None:
        fh.write(config_comment(config) + "\n")
    fh.write("value,count\n")
    for c, cnt in zip(centers, counts):
        fh.write(f"{format_float(c)},{int(cnt)}\n")


def reports_json(reports: list[ExperimentReport], config: dict | None = None) -> str:
    payload: dict = {"reports": [r.to_dict() for r in reports]}
    if config is not None:
        payload["config"] = _jsonable(config)
    return json.dumps(payload, indent=2, sort_keys=True)
