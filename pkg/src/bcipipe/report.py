"""Prediction-timeline and designed-vs-predicted heatmap figures.

Both renderers emit self-contained SVG plus a CSV of the plotted numbers.
Output is a pure function of the input: fixed decimal formatting, no
timestamps, no external references, so identical inputs give byte-identical
files (suitable for golden-file tests).
"""
from __future__ import annotations

from xml.sax.saxutils import escape

from .evaluate import ConfusionMatrix
from .errors import EmptyTracesError
from .tmv import PredictionTrace, traces_to_csv

# single-hue scale endpoints: zero count is white, max count is this blue
_HUE = (31, 119, 180)
_PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b", "#e377c2")

_FONT = 'font-family="Menlo, Consolas, monospace"'


def _f(value: float) -> str:
    return f"{value:.2f}"


def _svg_open(width: float, height: float) -> list[str]:
    return [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_f(width)}" height="{_f(height)}" '
        f'viewBox="0 0 {_f(width)} {_f(height)}">',
        f'<rect x="0" y="0" width="{_f(width)}" height="{_f(height)}" fill="#ffffff"/>',
    ]


def _text(x: float, y: float, content: str, size: int = 12, anchor: str = "middle",
          fill: str = "#000000", extra: str = "") -> str:
    return (
        f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}" '
        f'fill="{fill}" {_FONT}{extra}>{escape(content)}</text>'
    )


def _heat_color(fraction: float) -> str:
    r = round(255 + (_HUE[0] - 255) * fraction)
    g = round(255 + (_HUE[1] - 255) * fraction)
    b = round(255 + (_HUE[2] - 255) * fraction)
    return f"#{r:02x}{g:02x}{b:02x}"


def render_heatmap(
    matrix: ConfusionMatrix, task_names: tuple[str, ...] | None = None
) -> tuple[str, str]:
    """(svg, csv) for a designed-vs-predicted heatmap.

    x axis = designed task, y axis = predicted task. Cells carry the count and
    the percentage of that designed task's predictions; fill is a linear
    single-hue scale from 0 (white) to the maximum count.
    """
    t = matrix.n_classes
    names = task_names or tuple(f"task{i + 1}" for i in range(t))
    cell = 84.0
    left, top, right, bottom = 118.0, 54.0, 26.0, 88.0
    width = left + t * cell + right
    height = top + t * cell + bottom
    max_count = int(matrix.counts.max()) if matrix.total else 0
    row_sums = matrix.counts.sum(axis=1)

    parts = _svg_open(width, height)
    parts.append(_text(left + t * cell / 2, top - 24, "designed vs predicted tasks", size=15))
    for d in range(t):
        for p in range(t):
            count = int(matrix.counts[d, p])
            frac = count / max_count if max_count else 0.0
            x = left + d * cell
            y = top + p * cell
            parts.append(
                f'<rect x="{_f(x)}" y="{_f(y)}" width="{_f(cell)}" height="{_f(cell)}" '
                f'fill="{_heat_color(frac)}" stroke="#888888" stroke-width="1"/>'
            )
            pct = 100.0 * count / row_sums[d] if row_sums[d] else 0.0
            ink = "#ffffff" if frac > 0.5 else "#000000"
            parts.append(_text(x + cell / 2, y + cell / 2 - 4, str(count), size=14, fill=ink))
            parts.append(_text(x + cell / 2, y + cell / 2 + 16, f"{pct:.1f}%", size=11, fill=ink))
    for d in range(t):
        parts.append(_text(left + d * cell + cell / 2, top + t * cell + 22, names[d]))
    for p in range(t):
        parts.append(
            _text(left - 10, top + p * cell + cell / 2 + 4, names[p], anchor="end")
        )
    parts.append(_text(left + t * cell / 2, height - 34, "designed task", size=13))
    cy = top + t * cell / 2
    parts.append(
        _text(26, cy, "predicted task", size=13, extra=f' transform="rotate(-90 {_f(26)} {_f(cy)})"')
    )
    parts.append("</svg>")
    svg = "\n".join(parts) + "\n"

    lines = ["designed,predicted,count,percent"]
    for d in range(t):
        for p in range(t):
            count = int(matrix.counts[d, p])
            pct = 100.0 * count / row_sums[d] if row_sums[d] else 0.0
            lines.append(f"{names[d]},{names[p]},{count},{pct:.2f}")
    return svg, "\n".join(lines) + "\n"


def _step_points(times, labels, y_of, x_of) -> str:
    pts = []
    for i in range(len(times)):
        x = x_of(times[i])
        y = y_of(labels[i])
        if i > 0:
            pts.append(f"{_f(x)},{_f(y_of(labels[i - 1]))}")
        pts.append(f"{_f(x)},{_f(y)}")
    return " ".join(pts)


def render_timeline(
    traces: list[PredictionTrace], task_names: tuple[str, ...] | None = None
) -> tuple[str, str]:
    """(svg, csv) for per-session prediction timelines.

    One panel per session, stacked vertically; x = window time in seconds,
    y = predicted task row; one smoothed step-line per trace.
    """
    if not traces:
        raise EmptyTracesError("no traces to render")
    t_max_label = max(int(tr.smoothed.max(initial=0)) for tr in traces)
    t_max_label = max(t_max_label, max(int(tr.raw.max(initial=0)) for tr in traces))
    n_tasks = (len(task_names) if task_names else t_max_label + 1) or 1
    names = task_names or tuple(f"task{i + 1}" for i in range(n_tasks))

    sessions = sorted({tr.session_index for tr in traces})
    sources: list[str] = []
    for tr in traces:
        if tr.source not in sources:
            sources.append(tr.source)
    color = {s: _PALETTE[i % len(_PALETTE)] for i, s in enumerate(sources)}

    plot_w, panel_h, gap = 620.0, 30.0 * max(n_tasks - 1, 1), 34.0
    left, top, right, bottom = 96.0, 58.0, 30.0, 46.0
    height = top + len(sessions) * (panel_h + gap) - gap + bottom
    width = left + plot_w + right
    t_lo = min(float(tr.window_start_seconds[0]) for tr in traces if len(tr))
    t_hi = max(float(tr.window_start_seconds[-1]) for tr in traces if len(tr))
    span = (t_hi - t_lo) or 1.0

    def x_of(t_value: float) -> float:
        return left + (float(t_value) - t_lo) / span * plot_w

    parts = _svg_open(width, height)
    parts.append(_text(left + plot_w / 2, 24, "predicted task over time", size=15))
    for i, source in enumerate(sources):
        lx = left + i * 170.0
        parts.append(
            f'<rect x="{_f(lx)}" y="36" width="14" height="4" fill="{color[source]}"/>'
        )
        parts.append(_text(lx + 20, 42, source, size=11, anchor="start"))

    for row, session in enumerate(sessions):
        panel_top = top + row * (panel_h + gap)

        def y_of(label: int, panel_top=panel_top) -> float:
            rows = max(n_tasks - 1, 1)
            return panel_top + panel_h - (label / rows) * panel_h

        parts.append(
            f'<rect x="{_f(left)}" y="{_f(panel_top)}" width="{_f(plot_w)}" '
            f'height="{_f(panel_h)}" fill="none" stroke="#aaaaaa" stroke-width="1"/>'
        )
        parts.append(
            _text(left - 8, panel_top - 6, f"session {session}", size=12, anchor="end")
        )
        for task_id in range(n_tasks):
            y = y_of(task_id)
            parts.append(
                f'<line x1="{_f(left)}" y1="{_f(y)}" x2="{_f(left + plot_w)}" y2="{_f(y)}" '
                f'stroke="#eeeeee" stroke-width="1"/>'
            )
            parts.append(_text(left - 8, y + 4, names[task_id], size=10, anchor="end"))
        for tr in traces:
            if tr.session_index != session or not len(tr):
                continue
            pts = _step_points(tr.window_start_seconds, tr.smoothed, y_of, x_of)
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="{color[tr.source]}" '
                f'stroke-width="2"/>'
            )
    parts.append(_text(left + plot_w / 2, height - 14, "window time (s)", size=12))
    parts.append("</svg>")
    return "\n".join(parts) + "\n", traces_to_csv(traces)
