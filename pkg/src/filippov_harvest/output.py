"""CSV and SVG emission shared by the CLI subcommands.

CSV files use '.' decimals, '\\n' line endings, a header row and 12
significant digits.  Grid files carry their axis specifications and
provenance in full-precision comment lines so re-ingestion reproduces the
in-memory grid exactly.  SVG output is standalone (embedded styles) and
byte-deterministic for identical inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ParameterError
from .scan import AxisSpec, GridResult, RegionCode

GRID_MAGIC = "# filippov-harvest grid v1"

REGION_HEADER = ("status", "n_nh", "n_h", "placement_nh", "placement_h",
                 "stability_nh", "stability_h", "pseudo_exists", "pseudo_stability")


def format_number(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.12g}"


def format_cell(value) -> str:
    if isinstance(value, str):
        return value
    return format_number(value)


def write_csv(path: str, header: list[str], rows, comments: list[str] = ()) -> None:
    """Plain CSV writer; `rows` is an iterable of value sequences."""
    with open(path, "w", newline="\n") as handle:
        for comment in comments:
            handle.write(comment + "\n")
        handle.write(",".join(header) + "\n")
        for row in rows:
            handle.write(",".join(format_cell(v) for v in row) + "\n")


def csv_text(header: list[str], rows, comments: list[str] = ()) -> str:
    lines = list(comments)
    lines.append(",".join(header))
    lines.extend(",".join(format_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# -- grid round trip -----------------------------------------------------------


def _grid_comments(grid: GridResult) -> list[str]:
    comments = [GRID_MAGIC]
    for axis in grid.axes:
        comments.append(f"# axis,{axis.name},{axis.start!r},{axis.stop!r},{axis.n}")
    comments.append("# provenance," + json.dumps(grid.provenance, sort_keys=True))
    return comments


def _grid_rows(grid: GridResult):
    axis_a, axis_b = grid.axes
    values_a = axis_a.values()
    values_b = axis_b.values()
    for i, va in enumerate(values_a):
        for j, vb in enumerate(values_b):
            cell = grid.cells[i * axis_b.n + j]
            if isinstance(cell, RegionCode):
                payload = (cell.status, cell.n_nonharvest, cell.n_harvest,
                           cell.placements_nonharvest, cell.placements_harvest,
                           cell.stabilities_nonharvest, cell.stabilities_harvest,
                           cell.pseudo_exists, cell.pseudo_stability)
            else:
                payload = (cell,)
            yield (va, vb, *payload)


def _grid_header(grid: GridResult) -> list[str]:
    axis_a, axis_b = grid.axes
    if grid.provenance.get("kind") == "regions":
        return [axis_a.name, axis_b.name, *REGION_HEADER]
    return [axis_a.name, axis_b.name, "label"]


def grid_to_csv(grid: GridResult, path: str) -> None:
    write_csv(path, _grid_header(grid), _grid_rows(grid), comments=_grid_comments(grid))


def grid_csv_text(grid: GridResult) -> str:
    return csv_text(_grid_header(grid), _grid_rows(grid), comments=_grid_comments(grid))


def read_grid_csv(path: str) -> GridResult:
    """Rebuild a GridResult from `grid_to_csv` output, bit-for-bit."""
    axes: list[AxisSpec] = []
    provenance: dict = {}
    rows: list[list[str]] = []
    with open(path) as handle:
        lines = handle.read().splitlines()
    if not lines or lines[0] != GRID_MAGIC:
        raise ConfigError(f"{path}: not a grid CSV (missing marker line)")
    body = []
    for line in lines[1:]:
        if line.startswith("# axis,"):
            _, name, start, stop, n = line[2:].split(",")
            axes.append(AxisSpec(name, float(start), float(stop), int(n)))
        elif line.startswith("# provenance,"):
            provenance = json.loads(line[len("# provenance,"):])
        elif line.startswith("#"):
            continue
        elif line:
            body.append(line)
    if len(axes) != 2 or not body:
        raise ConfigError(f"{path}: malformed grid CSV")
    header, *data = body
    columns = header.split(",")
    cells = []
    regions = provenance.get("kind") == "regions"
    for line in data:
        parts = line.split(",")
        if len(parts) != len(columns):
            raise ConfigError(f"{path}: row width {len(parts)} != header width {len(columns)}")
        if regions:
            (status, n_nh, n_h, pl_nh, pl_h, st_nh, st_h, p_ex, p_st) = parts[2:]
            cells.append(RegionCode(
                n_nonharvest=int(n_nh), n_harvest=int(n_h),
                placements_nonharvest=pl_nh, placements_harvest=pl_h,
                stabilities_nonharvest=st_nh, stabilities_harvest=st_h,
                pseudo_exists=p_ex == "1", pseudo_stability=p_st, status=status))
        else:
            cells.append(parts[2])
    return GridResult(axes=tuple(axes), cells=cells, provenance=provenance)


# -- SVG -----------------------------------------------------------------------

#: Marker colors following the stable/irrelevant/tangent dot convention.
MARKER_COLORS = {"stable": "#1a9641", "irrelevant": "#000000", "tangent": "#d7191c",
                 "pseudo": "#1a9641"}

_HEATMAP_PALETTE = (
    "#a6cee3", "#1f78b4", "#b2df8a", "#33a02c", "#fb9a99", "#e31a1c",
    "#fdbf6f", "#ff7f00", "#cab2d6", "#6a3d9a", "#ffff99", "#b15928",
)

_SERIES_COLORS = {"flow_s1": "#1f77b4", "flow_s2": "#9467bd", "sliding": "#d7191c"}


@dataclass
class SvgPlotSpec:
    """Declarative plot: polyline series and/or a label heatmap, plus the
    manifold line, the sliding segment, and classified point markers."""

    title: str
    x_label: str
    y_label: str
    width: int = 720
    height: int = 540
    series: list[tuple[str, np.ndarray]] = field(default_factory=list)
    heatmap: GridResult | None = None
    manifold_x: float | None = None
    sliding_segment: tuple[float, float] | None = None
    markers: list[tuple[float, float, str, str]] = field(default_factory=list)
    x_range: tuple[float, float] | None = None
    y_range: tuple[float, float] | None = None


def _finite_or_raise(values) -> None:
    arr = np.asarray(values, dtype=float)
    if arr.size and not np.isfinite(arr).all():
        raise ParameterError("SVG payload contains non-finite coordinates")


def _data_bounds(spec: SvgPlotSpec) -> tuple[float, float, float, float]:
    xs, ys = [], []
    if spec.x_range is not None:
        xs.extend(spec.x_range)
    if spec.y_range is not None:
        ys.extend(spec.y_range)
    for _, points in spec.series:
        if len(points):
            xs.extend((points[:, 0].min(), points[:, 0].max()))
            ys.extend((points[:, 1].min(), points[:, 1].max()))
    if spec.heatmap is not None:
        axis_a, axis_b = spec.heatmap.axes
        xs.extend((axis_a.start, axis_a.stop))
        ys.extend((axis_b.start, axis_b.stop))
    for x, y, _, _ in spec.markers:
        xs.append(x)
        ys.append(y)
    if spec.manifold_x is not None:
        xs.append(spec.manifold_x)
    if not xs or not ys:
        raise ParameterError("SVG plot has no payload to size the axes from")
    x_lo, x_hi = min(xs), max(xs)
    y_lo, y_hi = min(ys), max(ys)
    pad_x = 0.05 * (x_hi - x_lo or 1.0)
    pad_y = 0.05 * (y_hi - y_lo or 1.0)
    return x_lo - pad_x, x_hi + pad_x, y_lo - pad_y, y_hi + pad_y


def emit_svg(spec: SvgPlotSpec, path: str) -> None:
    for _, points in spec.series:
        _finite_or_raise(points)
    _finite_or_raise([m[:2] for m in spec.markers])
    x_lo, x_hi, y_lo, y_hi = _data_bounds(spec)
    margin_l, margin_r, margin_t, margin_b = 64, 150, 40, 48
    plot_w = spec.width - margin_l - margin_r
    plot_h = spec.height - margin_t - margin_b

    def sx(x: float) -> float:
        return margin_l + (x - x_lo) / (x_hi - x_lo) * plot_w

    def sy(y: float) -> float:
        return margin_t + (y_hi - y) / (y_hi - y_lo) * plot_h

    out = []
    out.append(f'<svg xmlns="http://www.w3.org/2000/svg" width="{spec.width}" '
               f'height="{spec.height}" viewBox="0 0 {spec.width} {spec.height}">')
    out.append("<style>text{font-family:sans-serif;font-size:12px}"
               ".title{font-size:14px;font-weight:bold}</style>")
    out.append(f'<rect x="0" y="0" width="{spec.width}" height="{spec.height}" fill="white"/>')
    out.append(f'<text class="title" x="{spec.width/2:.1f}" y="20" '
               f'text-anchor="middle">{spec.title}</text>')

    legend: list[tuple[str, str]] = []
    if spec.heatmap is not None:
        axis_a, axis_b = spec.heatmap.axes
        labels = sorted({_cell_label(c) for c in spec.heatmap.cells})
        colors = {label: _HEATMAP_PALETTE[i % len(_HEATMAP_PALETTE)]
                  for i, label in enumerate(labels)}
        legend.extend((label, colors[label]) for label in labels)
        cell_w = plot_w / axis_a.n
        cell_h = plot_h / axis_b.n
        values_a = axis_a.values()
        values_b = axis_b.values()
        for i in range(axis_a.n):
            x_px = sx(values_a[i]) - cell_w / 2.0
            for j in range(axis_b.n):
                color = colors[_cell_label(spec.heatmap.cells[i * axis_b.n + j])]
                y_px = sy(values_b[j]) - cell_h / 2.0
                out.append(f'<rect x="{x_px:.2f}" y="{y_px:.2f}" '
                           f'width="{cell_w + 0.5:.2f}" height="{cell_h + 0.5:.2f}" '
                           f'fill="{color}"/>')

    if spec.manifold_x is not None:
        x_px = sx(spec.manifold_x)
        out.append(f'<line x1="{x_px:.2f}" y1="{margin_t}" x2="{x_px:.2f}" '
                   f'y2="{margin_t + plot_h}" stroke="#555555" stroke-width="1" '
                   'stroke-dasharray="6,4"/>')
        legend.append(("switching line", "#555555"))
    if spec.sliding_segment is not None and spec.manifold_x is not None:
        y0, y1 = spec.sliding_segment
        x_px = sx(spec.manifold_x)
        out.append(f'<line x1="{x_px:.2f}" y1="{sy(y0):.2f}" x2="{x_px:.2f}" '
                   f'y2="{sy(y1):.2f}" stroke="{MARKER_COLORS["tangent"]}" '
                   'stroke-width="4" stroke-linecap="round"/>')
        legend.append(("sliding segment", MARKER_COLORS["tangent"]))

    seen_series = set()
    for name, points in spec.series:
        color = _SERIES_COLORS.get(name, "#1f77b4")
        coords = " ".join(f"{sx(px):.2f},{sy(py):.2f}" for px, py in points)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{color}" '
                   'stroke-width="1.5"/>')
        if name not in seen_series:
            seen_series.add(name)
            legend.append((name, color))

    for x, y, kind, label in spec.markers:
        color = MARKER_COLORS.get(kind, "#000000")
        out.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" fill="{color}"/>')
        if label:
            out.append(f'<text x="{sx(x) + 6:.2f}" y="{sy(y) - 6:.2f}">{label}</text>')

    # axes frame and labels
    out.append(f'<rect x="{margin_l}" y="{margin_t}" width="{plot_w}" '
               f'height="{plot_h}" fill="none" stroke="#222222"/>')
    for frac in (0.0, 0.5, 1.0):
        x_val = x_lo + frac * (x_hi - x_lo)
        y_val = y_lo + frac * (y_hi - y_lo)
        out.append(f'<text x="{sx(x_val):.2f}" y="{margin_t + plot_h + 16}" '
                   f'text-anchor="middle">{x_val:.4g}</text>')
        out.append(f'<text x="{margin_l - 6}" y="{sy(y_val) + 4:.2f}" '
                   f'text-anchor="end">{y_val:.4g}</text>')
    out.append(f'<text x="{margin_l + plot_w / 2:.1f}" y="{spec.height - 10}" '
               f'text-anchor="middle">{spec.x_label}</text>')
    out.append(f'<text x="16" y="{margin_t + plot_h / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {margin_t + plot_h / 2:.1f})">{spec.y_label}</text>')

    legend_x = margin_l + plot_w + 12
    for row, (label, color) in enumerate(legend):
        y_px = margin_t + 10 + 18 * row
        out.append(f'<rect x="{legend_x}" y="{y_px - 9}" width="12" height="12" '
                   f'fill="{color}"/>')
        out.append(f'<text x="{legend_x + 18}" y="{y_px + 2}">{label}</text>')

    out.append("</svg>")
    with open(path, "w", newline="\n") as handle:
        handle.write("\n".join(out) + "\n")


def _cell_label(cell) -> str:
    if isinstance(cell, RegionCode):
        if cell.status != "ok":
            return "undetermined"
        return (f"nh:{cell.placements_nonharvest or 'absent'}"
                f"{cell.stabilities_nonharvest}"
                f"|h:{cell.placements_harvest or 'absent'}{cell.stabilities_harvest}"
                f"|ep:{cell.pseudo_stability}")
    return str(cell)
