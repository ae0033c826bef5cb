"""Figure rendering.

All figures funnel through `render_svg`, which takes plain data series and
writes a self-contained SVG via matplotlib (glyphs outlined as paths, no
external assets).  Output is byte-reproducible: a fixed hash salt and no
date metadata, unless a timestamp is explicitly requested.
"""
from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .continuum import ObstacleSet, PiecewiseQuadratic  # noqa: E402
from .percolation import LipschitzSurface, SiteGrid  # noqa: E402

plt.rcParams["svg.hashsalt"] = "pinning"


class Series(dict):
    """One plottable series: label, kind ('line' or 'points'), x, y."""

    def __init__(self, label: str, kind: str, x: Sequence[float], y: Sequence[float], **style):
        if kind not in ("line", "points"):
            raise ValueError(f"series kind must be 'line' or 'points', got {kind!r}")
        if len(x) != len(y):
            raise ValueError("series x and y must have equal length")
        super().__init__(label=label, kind=kind, x=list(x), y=list(y), style=style)


def render_svg(
    series: Sequence[dict],
    style: dict | None = None,
    out_path: str | Path = "figure.svg",
    *,
    timestamp: bool = False,
) -> Path:
    """Render polyline/point series to a self-contained SVG file.

    ``style`` may set title, xlabel, ylabel and figsize.  Rejects an empty
    series list.  Reruns produce identical bytes unless ``timestamp``.
    """
    if not series:
        raise ValueError("render_svg needs at least one series")
    style = style or {}
    fig, ax = plt.subplots(figsize=style.get("figsize", (7.0, 4.0)))
    for s in series:
        kws = dict(s.get("style", {}))
        kws.setdefault("label", s.get("label"))
        if s["kind"] == "line":
            ax.plot(s["x"], s["y"], **kws)
        else:
            kws.setdefault("s", 9)
            ax.scatter(s["x"], s["y"], **kws)
    if style.get("title"):
        ax.set_title(style["title"])
    ax.set_xlabel(style.get("xlabel", "x"))
    ax.set_ylabel(style.get("ylabel", "y"))
    if any(s.get("label") for s in series):
        ax.legend(loc="best", fontsize=8)
    out_path = Path(out_path)
    metadata = None if timestamp else {"Date": None}
    fig.savefig(out_path, format="svg", metadata=metadata, bbox_inches="tight")
    plt.close(fig)
    return out_path


def discrete_path_figure(path, field, out_path, *, band: int = 8, max_span: int = 2000) -> Path:
    """Barrier heights as a polyline with positive-force sites dotted around it."""
    w = min(path.half_width, max_span // 2)
    xs = list(range(-w, w + 1))
    ys = [path.v[i] for i in xs]
    ox, oy = [], []
    lo, hi = min(ys) - band, max(ys) + band
    if (hi - lo) * len(xs) <= 200_000:
        from .media import is_minus_inf

        for i in xs:
            for j in range(path.v[i] - band, path.v[i] + band + 1):
                f = field.site_value(i, j)
                if not is_minus_inf(f) and f > 0:
                    ox.append(i)
                    oy.append(j)
    series = [Series("barrier", "line", xs, ys, color="tab:blue", linewidth=1.2)]
    if ox:
        series.append(Series("positive force", "points", ox, oy, color="tab:green", alpha=0.5))
    return render_svg(series, {"title": "discrete barrier", "xlabel": "site", "ylabel": "height"}, out_path)


def trajectory_figure(summaries: Sequence, out_path) -> Path:
    """Running max height against time for one or more trajectories."""
    series = []
    for tr in summaries:
        xs = [t for t, _ in tr.height_series]
        ys = [h for _, h in tr.height_series]
        series.append(Series(f"seed {tr.seed}", "line", xs, ys, linewidth=1.0))
    return render_svg(series, {"title": "interface max height", "xlabel": "t", "ylabel": "max height"}, out_path)


def grid_figure(grid: SiteGrid, surface: LipschitzSurface | None, out_path) -> Path:
    """Open sites as dots with the minimal surface drawn over them."""
    open_x, open_y, closed_x, closed_y = [], [], [], []
    for z in range(grid.width):
        for h in range(1, grid.height + 1):
            (open_x if grid.is_open(z, h) else closed_x).append(z)
            (open_y if grid.is_open(z, h) else closed_y).append(h)
    series = []
    if open_x:
        series.append(Series("open", "points", open_x, open_y, color="tab:green", alpha=0.6))
    if closed_x:
        series.append(Series("closed", "points", closed_x, closed_y, color="tab:red", alpha=0.6, marker="x"))
    if surface is not None:
        series.append(Series("surface", "line", list(range(grid.width)), list(surface.phi),
                             color="tab:blue", linewidth=1.5))
    return render_svg(series, {"title": "site grid", "xlabel": "z", "ylabel": "row"}, out_path)


def continuum_figure(
    pq: PiecewiseQuadratic,
    obstacles: ObstacleSet,
    out_path,
    *,
    points_per_segment: int = 24,
) -> Path:
    """Assembled barrier with positive and negative centers as two glyph classes."""
    xs, ys = [], []
    for s in range(len(pq.segments)):
        piece = pq.piece(s)
        for idx in range(points_per_segment + 1):
            x = piece.x_lo + (piece.x_hi - piece.x_lo) * idx / points_per_segment
            xs.append(x)
            ys.append(piece.value(x))
    y_cap = max(ys) * 2.0 + 1.0
    series = [Series("barrier", "line", xs, ys, color="tab:blue", linewidth=1.2)]
    pos = [(x, y) for x, y in obstacles.positives if y <= y_cap]
    neg = [(x, y) for x, y in obstacles.negatives if y <= y_cap]
    if pos:
        series.append(Series("positive obstacles", "points",
                             [p[0] for p in pos], [p[1] for p in pos], color="tab:green", alpha=0.35))
    if neg:
        series.append(Series("negative obstacles", "points",
                             [p[0] for p in neg], [p[1] for p in neg], color="tab:red", marker="x", alpha=0.6))
    return render_svg(series, {"title": "continuum barrier", "xlabel": "x", "ylabel": "y"}, out_path)


def estimate_figure(labels: Sequence[float], estimates: Sequence[float],
                    errors: Sequence[float], reference: Sequence[float], out_path) -> Path:
    """Per-point estimates with error bars against a reference curve."""
    series = [
        Series("estimate", "points", list(labels), list(estimates), color="tab:blue"),
        Series("reference", "line", list(labels), list(reference), color="tab:orange", linewidth=1.0),
    ]
    fig_path = render_svg(series, {"title": "estimates vs reference", "xlabel": "parameter",
                                   "ylabel": "value"}, out_path)
    return fig_path
