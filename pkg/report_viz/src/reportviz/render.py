"""Figure assembly: dynamics panels, unfairness curves, mode comparisons.

The dynamics layout mirrors the source material's convention: acceptance
rate in red, qualification rate in blue, classifier bias in black, one
panel per group, optional error bars (standard error by default, or one
standard deviation via the stderr * sqrt(n_trials) rescale).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .schema import AggregateTable, SchemaError, read_aggregate_csv
from .svg import Element, Frame, document, fmt, nice_ticks

SERIES_COLORS = {"a": "#d62728", "q": "#1f77b4", "delta": "#000000"}
DYNAMICS_METRICS = ("a", "q", "delta")

PANEL_W = 300
PANEL_H = 230
MARGIN_L = 52
MARGIN_R = 18
MARGIN_T = 42
MARGIN_B = 46
GAP = 26


@dataclass
class FigureSpec:
    csv_paths: list
    kind: str  # dynamics | unfairness | comparison
    out_path: str
    groups: list[str] | None = None
    error_bars: str = "stderr"  # stderr | std | none
    title: str | None = None

    def __post_init__(self):
        if self.kind not in ("dynamics", "unfairness", "comparison"):
            raise SchemaError(f"unknown figure kind {self.kind!r}")
        if self.error_bars not in ("stderr", "std", "none"):
            raise SchemaError(f"unknown error bar mode {self.error_bars!r}")
        if not self.csv_paths:
            raise SchemaError("no input CSVs")
        if self.kind != "comparison" and len(self.csv_paths) != 1:
            raise SchemaError(f"{self.kind} figures take exactly one CSV")


def _error_values(spec: FigureSpec, stderrs, n_trials):
    if spec.error_bars == "none":
        return None
    if spec.error_bars == "std":
        return [s * (n_trials**0.5) for s in stderrs]
    return list(stderrs)


def _panel(root: Element, frame: Frame, title: str, panel_id: str) -> Element:
    g = root.add("g", **{"class": "panel", "data-panel": panel_id, **frame.attrs()})
    g.add(
        "rect",
        x=fmt(frame.px_x),
        y=fmt(frame.px_y),
        width=fmt(frame.px_w),
        height=fmt(frame.px_h),
        fill="none",
        stroke="#444444",
        stroke_width="1",
    )
    g.add_text(
        "text",
        title,
        x=fmt(frame.px_x + frame.px_w / 2),
        y=fmt(frame.px_y - 10),
        text_anchor="middle",
        font_size="13",
        **{"class": "panel-title"},
    )
    for tx in nice_ticks(frame.x0, frame.x1, 6):
        px, py = frame.to_px(tx, frame.y0)
        g.add("line", x1=fmt(px), y1=fmt(py), x2=fmt(px), y2=fmt(py + 4),
              stroke="#444444", stroke_width="1")
        g.add_text("text", fmt(tx), x=fmt(px), y=fmt(py + 16), text_anchor="middle",
                   font_size="10", **{"class": "tick"})
    for ty in nice_ticks(frame.y0, frame.y1, 5):
        px, py = frame.to_px(frame.x0, ty)
        g.add("line", x1=fmt(px - 4), y1=fmt(py), x2=fmt(px), y2=fmt(py),
              stroke="#444444", stroke_width="1")
        g.add_text("text", fmt(ty), x=fmt(px - 7), y=fmt(py + 3), text_anchor="end",
                   font_size="10", **{"class": "tick"})
    g.add_text(
        "text", "round", x=fmt(frame.px_x + frame.px_w / 2),
        y=fmt(frame.px_y + frame.px_h + 32), text_anchor="middle", font_size="11",
        **{"class": "axis-label"},
    )
    return g


def _draw_series(panel, frame, rounds, means, errors, name, color, group):
    if errors is not None:
        for t, m, e in zip(rounds, means, errors):
            x1, y1 = frame.to_px(t, max(frame.y0, m - e))
            x2, y2 = frame.to_px(t, min(frame.y1, m + e))
            panel.add(
                "line",
                x1=fmt(x1), y1=fmt(y1), x2=fmt(x2), y2=fmt(y2),
                stroke=color, stroke_width="1", opacity="0.65",
                **{
                    "class": "errorbar",
                    "data-series": name,
                    "data-group": group,
                    "data-round": t,
                },
            )
    pts = " ".join(
        f"{fmt(px)},{fmt(py)}"
        for px, py in (frame.to_px(t, m) for t, m in zip(rounds, means))
    )
    panel.add(
        "polyline",
        points=pts,
        fill="none",
        stroke=color,
        stroke_width="1.6",
        **{"class": "series", "data-series": name, "data-group": group},
    )
    for t, m in zip(rounds, means):
        px, py = frame.to_px(t, m)
        panel.add(
            "circle", cx=fmt(px), cy=fmt(py), r="2.2", fill=color,
            **{"class": "marker", "data-series": name, "data-group": group,
               "data-round": t},
        )


def _legend(panel, frame, entries):
    x = frame.px_x + 8
    y = frame.px_y + 14
    for name, color in entries:
        panel.add("line", x1=fmt(x), y1=fmt(y - 3), x2=fmt(x + 16), y2=fmt(y - 3),
                  stroke=color, stroke_width="2", **{"class": "legend-swatch"})
        panel.add_text("text", name, x=fmt(x + 20), y=fmt(y), font_size="11",
                       **{"class": "legend-label", "data-series": name})
        y += 14


def _dynamics_panels(root, tables_and_titles, spec: FigureSpec, x_offset=0):
    panel_idx = 0
    for table, title in tables_and_titles:
        groups = spec.groups or table.groups
        for gid in groups:
            rounds, _, _ = table.series(gid, "a")
            frame = Frame(
                px_x=MARGIN_L + panel_idx * (PANEL_W + GAP),
                px_y=MARGIN_T,
                px_w=PANEL_W,
                px_h=PANEL_H,
                x0=float(min(rounds)),
                x1=float(max(rounds)) if max(rounds) > min(rounds) else min(rounds) + 1.0,
                y0=0.0,
                y1=1.0,
            )
            label = f"{title} group {gid}" if title else f"group {gid}"
            panel = _panel(root, frame, label, f"{title or 'dynamics'}:{gid}")
            n_trials = table.rows[0].n_trials
            for metric in DYNAMICS_METRICS:
                rounds, means, errs = table.series(gid, metric)
                _draw_series(
                    panel, frame, rounds, means,
                    _error_values(spec, errs, n_trials),
                    metric, SERIES_COLORS[metric], gid,
                )
            _legend(panel, frame, [(m, SERIES_COLORS[m]) for m in DYNAMICS_METRICS])
            panel_idx += 1
    return panel_idx


def render(spec: FigureSpec) -> Path:
    """Write the figure and return its path."""
    tables = [read_aggregate_csv(p) for p in spec.csv_paths]

    if spec.kind in ("dynamics", "comparison"):
        if spec.kind == "dynamics":
            pairs = [(tables[0], spec.title or "")]
            n_panels = len(spec.groups or tables[0].groups)
        else:
            pairs = [(t, Path(p).stem) for t, p in zip(tables, spec.csv_paths)]
            n_panels = sum(len(spec.groups or t.groups) for t in tables)
        width = MARGIN_L + n_panels * (PANEL_W + GAP) - GAP + MARGIN_R
        root = document(width, MARGIN_T + PANEL_H + MARGIN_B)
        drawn = _dynamics_panels(root, pairs, spec)
        if drawn == 0:
            raise SchemaError("nothing to draw: empty group selection")
    else:  # unfairness
        table = tables[0]
        gid = (spec.groups or table.groups)[0]
        rounds, means, errs = table.series(gid, "unfairness")
        y_hi = max(max(m + e for m, e in zip(means, errs)), 1e-6)
        frame = Frame(
            px_x=MARGIN_L, px_y=MARGIN_T, px_w=PANEL_W + 80, px_h=PANEL_H,
            x0=float(min(rounds)),
            x1=float(max(rounds)) if max(rounds) > min(rounds) else min(rounds) + 1.0,
            y0=0.0, y1=1.1 * y_hi,
        )
        root = document(MARGIN_L + PANEL_W + 80 + MARGIN_R, MARGIN_T + PANEL_H + MARGIN_B)
        panel = _panel(root, frame, spec.title or "demographic parity gap", "unfairness")
        n_trials = table.rows[0].n_trials
        _draw_series(panel, frame, rounds, means,
                     _error_values(spec, errs, n_trials),
                     "unfairness", "#2ca02c", gid)
        t_star = rounds[means.index(min(means))]
        px, py = frame.to_px(t_star, min(means))
        panel.add("circle", cx=fmt(px), cy=fmt(py), r="5", fill="none",
                  stroke="#d62728", stroke_width="1.5",
                  **{"class": "minimum-marker", "data-round": t_star})
        panel.add_text("text", f"min at t={t_star}", x=fmt(px + 8), y=fmt(py - 8),
                       font_size="11", fill="#d62728", **{"class": "minimum-label"})

    out = Path(spec.out_path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(root.to_string() + "\n", encoding="utf-8")
    return out
