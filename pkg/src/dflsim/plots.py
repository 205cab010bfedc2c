"""Deterministic SVG rendering of traces and AAL summaries.

The writer is deliberately dependency-free: identical inputs must yield
byte-identical files, so no timestamps, generated ids, or library version
strings may appear in the output.
"""
from __future__ import annotations

import csv
from typing import Sequence

PALETTE = ("#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
           "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")

WIDTH, HEIGHT = 760, 480
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 62, 170, 24, 48
PLOT_W = WIDTH - MARGIN_L - MARGIN_R
PLOT_H = HEIGHT - MARGIN_T - MARGIN_B


class PlotError(ValueError):
    pass


def _f(v: float) -> str:
    return f"{v:.2f}"


def _header(title: str) -> list[str]:
    return [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
        f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{MARGIN_L}" y="16" font-family="sans-serif" '
        f'font-size="13" fill="#333">{title}</text>',
    ]


def _axes(x_label: str, y_label: str) -> list[str]:
    x0, y0 = MARGIN_L, HEIGHT - MARGIN_B
    x1, y1 = MARGIN_L + PLOT_W, MARGIN_T
    return [
        f'<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="#222"/>',
        f'<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="#222"/>',
        f'<text x="{x0 + PLOT_W / 2:.0f}" y="{HEIGHT - 10}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'fill="#222">{x_label}</text>',
        f'<text x="14" y="{MARGIN_T + PLOT_H / 2:.0f}" '
        f'font-family="sans-serif" font-size="12" text-anchor="middle" '
        f'fill="#222" transform="rotate(-90 14 '
        f'{MARGIN_T + PLOT_H / 2:.0f})">{y_label}</text>',
    ]


def _legend(labels: Sequence[str]) -> list[str]:
    parts = []
    x = MARGIN_L + PLOT_W + 14
    for k, label in enumerate(labels):
        y = MARGIN_T + 14 + 18 * k
        color = PALETTE[k % len(PALETTE)]
        parts.append(f'<rect x="{x}" y="{y - 9}" width="12" height="12" '
                     f'fill="{color}"/>')
        parts.append(f'<text x="{x + 17}" y="{y + 1}" '
                     f'font-family="sans-serif" font-size="11" '
                     f'fill="#222">{label}</text>')
    return parts


def render_accuracy_plot(series: Sequence[tuple[str, Sequence[tuple[int, float]]]],
                         title: str = "accuracy vs epoch") -> str:
    """Polyline per series; y spans [0, 1], x spans the epoch range."""
    if not series:
        raise PlotError("nothing to plot")
    max_epoch = max(pt[0] for _, pts in series for pt in pts)
    max_epoch = max(max_epoch, 1)
    parts = _header(title) + _axes("epoch", "avg honest test accuracy")
    y0 = HEIGHT - MARGIN_B

    def sx(e: float) -> float:
        return MARGIN_L + e / max_epoch * PLOT_W

    def sy(a: float) -> float:
        return y0 - a * PLOT_H

    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(f'<line x1="{MARGIN_L - 4}" y1="{_f(sy(tick))}" '
                     f'x2="{MARGIN_L}" y2="{_f(sy(tick))}" stroke="#222"/>')
        parts.append(f'<text x="{MARGIN_L - 8}" y="{_f(sy(tick) + 4)}" '
                     f'font-family="sans-serif" font-size="10" '
                     f'text-anchor="end" fill="#222">{tick:g}</text>')
    for k, (label, pts) in enumerate(series):
        color = PALETTE[k % len(PALETTE)]
        coords = " ".join(f"{_f(sx(e))},{_f(sy(a))}" for e, a in pts)
        parts.append(f'<polyline points="{coords}" fill="none" '
                     f'stroke="{color}" stroke-width="1.5"/>')
    parts += _legend([label for label, _ in series])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_aal_bars(bars: Sequence[tuple[str, float]],
                    title: str = "mean AAL by strategy") -> str:
    """One bar per entry, in the given order, heights equal to mean AAL."""
    if not bars:
        raise PlotError("nothing to plot")
    values = [v for _, v in bars]
    v_max = max(max(values), 0.0)
    v_min = min(min(values), 0.0)
    span = v_max - v_min or 1.0
    y0 = HEIGHT - MARGIN_B

    def sy(v: float) -> float:
        return y0 - (v - v_min) / span * PLOT_H

    parts = _header(title) + _axes("strategy", "mean AAL")
    parts.append(f'<line x1="{MARGIN_L}" y1="{_f(sy(0.0))}" '
                 f'x2="{MARGIN_L + PLOT_W}" y2="{_f(sy(0.0))}" '
                 f'stroke="#999" stroke-dasharray="3 3"/>')
    slot = PLOT_W / len(bars)
    bar_w = slot * 0.6
    for k, (label, value) in enumerate(bars):
        color = PALETTE[k % len(PALETTE)]
        x = MARGIN_L + slot * k + (slot - bar_w) / 2
        y_top = min(sy(value), sy(0.0))
        h = abs(sy(value) - sy(0.0))
        parts.append(f'<rect class="bar" x="{_f(x)}" y="{_f(y_top)}" '
                     f'width="{_f(bar_w)}" height="{_f(h)}" fill="{color}"/>')
        parts.append(f'<text x="{_f(x + bar_w / 2)}" y="{y0 + 14}" '
                     f'font-family="sans-serif" font-size="10" '
                     f'text-anchor="middle" fill="#222">{label}</text>')
    parts += _legend([f"{label}: {value:.1f}" for label, value in bars])
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


# ------------------------------ CSV input ------------------------------ #

def _read_rows(paths: Sequence[str], required: set[str]) -> list[dict]:
    rows = []
    for path in paths:
        try:
            with open(path, newline="") as fh:
                reader = csv.DictReader(fh)
                if reader.fieldnames is None or not required.issubset(
                        reader.fieldnames):
                    raise PlotError(f"{path}: expected columns "
                                    f"{sorted(required)}, got "
                                    f"{reader.fieldnames}")
                rows.extend(reader)
        except OSError as exc:
            raise PlotError(f"could not read {path}: {exc}") from exc
        except (csv.Error, UnicodeDecodeError) as exc:
            raise PlotError(f"malformed CSV {path}: {exc}") from exc
    if not rows:
        raise PlotError("input CSV has no data rows")
    return rows


def accuracy_series_from_traces(paths: Sequence[str]
                                ) -> list[tuple[str, list[tuple[int, float]]]]:
    """Series per (run, variant) from trace CSVs; labels start with the
    strategy token of the run id."""
    rows = _read_rows(paths, {"epoch", "run_id", "variant",
                              "avg_honest_test_acc"})
    series: dict[tuple[str, str], list[tuple[int, float]]] = {}
    order: list[tuple[str, str]] = []
    for row in rows:
        try:
            key = (row["run_id"], row["variant"])
            point = (int(row["epoch"]), float(row["avg_honest_test_acc"]))
        except (TypeError, ValueError) as exc:
            raise PlotError(f"malformed trace row {row!r}") from exc
        if key not in series:
            series[key] = []
            order.append(key)
        series[key].append(point)
    out = []
    for run_id, variant in order:
        strategy = run_id.split("_")[0]
        out.append((f"{strategy} ({variant})",
                    sorted(series[(run_id, variant)])))
    return out


def aal_bars_from_summary(paths: Sequence[str]) -> list[tuple[str, float]]:
    """Mean AAL per strategy, ordered by first appearance in the summary."""
    rows = _read_rows(paths, {"strategy", "aal"})
    sums: dict[str, list[float]] = {}
    order: list[str] = []
    for row in rows:
        try:
            strategy, aal = row["strategy"], float(row["aal"])
        except (TypeError, ValueError) as exc:
            raise PlotError(f"malformed summary row {row!r}") from exc
        if strategy not in sums:
            sums[strategy] = []
            order.append(strategy)
        sums[strategy].append(aal)
    return [(s, sum(sums[s]) / len(sums[s])) for s in order]


def plot_csv(paths: Sequence[str], kind: str, out_path: str) -> None:
    if kind == "accuracy-vs-epoch":
        svg = render_accuracy_plot(accuracy_series_from_traces(paths))
    elif kind == "aal-bars":
        svg = render_aal_bars(aal_bars_from_summary(paths))
    else:
        raise PlotError(f"unknown plot kind {kind!r}")
    with open(out_path, "w") as fh:
        fh.write(svg)
