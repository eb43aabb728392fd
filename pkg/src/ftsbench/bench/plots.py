"""Static plot files: CSV data next to a self-contained SVG line chart."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from ..history import TrainingHistory
from ..series import ReturnSeries

WIDTH, HEIGHT = 640, 360
MARGIN = {"left": 70, "right": 20, "top": 30, "bottom": 45}
COLORS = ("#1f77b4", "#d62728")


def _fmt(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return list(np.linspace(lo, hi, n))


def line_chart(
    series: Sequence[tuple[str, Sequence[float], Sequence[float]]],
    title: str,
    x_label: str,
    y_label: str,
    x_tick_labels: tuple[str, str] | None = None,
) -> str:
    """SVG markup with one polyline per ``(label, xs, ys)`` series.

    NaN points are left out of their polyline.
    """
    xs_all = np.concatenate([np.asarray(xs, dtype=float) for _, xs, _ in series])
    ys_all = np.concatenate([np.asarray(ys, dtype=float) for _, _, ys in series])
    ok = np.isfinite(ys_all)
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = (float(ys_all[ok].min()), float(ys_all[ok].max())) if ok.any() else (0.0, 1.0)
    if y_hi == y_lo:
        y_lo, y_hi = y_lo - 1.0, y_hi + 1.0
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - left - MARGIN["right"]
    ph = HEIGHT - top - MARGIN["bottom"]

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * pw

    def py(y):
        return top + (y_hi - y) / (y_hi - y_lo) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="18" text-anchor="middle" font-size="13">{title}</text>',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}" stroke="black"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}" stroke="black"/>',
    ]
    for y in _ticks(y_lo, y_hi):
        parts.append(
            f'<text x="{left - 6}" y="{py(y) + 4:.2f}" text-anchor="end">{y:.4g}</text>'
        )
    if x_tick_labels is None:
        for x in _ticks(x_lo, x_hi):
            parts.append(f'<text x="{px(x):.2f}" y="{top + ph + 16}" text-anchor="middle">{x:.4g}</text>')
    else:
        parts.append(f'<text x="{left}" y="{top + ph + 16}" text-anchor="start">{x_tick_labels[0]}</text>')
        parts.append(f'<text x="{left + pw}" y="{top + ph + 16}" text-anchor="end">{x_tick_labels[1]}</text>')
    parts.append(f'<text x="{left + pw / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">{x_label}</text>')
    parts.append(
        f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 14 {top + ph / 2:.1f})">{y_label}</text>'
    )
    for i, (label, xs, ys) in enumerate(series):
        color = COLORS[i % len(COLORS)]
        pts = " ".join(
            f"{px(float(x)):.2f},{py(float(y)):.2f}" for x, y in zip(xs, ys) if math.isfinite(float(y))
        )
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{pts}"/>')
        ly = top + 12 + 14 * i
        parts.append(f'<rect x="{left + pw - 110}" y="{ly - 8}" width="10" height="10" fill="{color}"/>')
        parts.append(f'<text x="{left + pw - 95}" y="{ly + 1}">{label}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def emit_plots(returns: ReturnSeries, histories: Mapping[str, TrainingHistory], out_dir) -> list[Path]:
    """Daily-return chart plus one train/validation loss chart per trained model."""
    if returns is None or len(returns) == 0:
        raise ValueError("empty return series")
    for name, hist in histories.items():
        if hist.epochs == 0:
            raise ValueError(f"empty history for {name}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    path = out / "returns.csv"
    _write_csv(path, ["date", "return"], [(d.isoformat(), _fmt(v)) for d, v in zip(returns.dates, returns.values)])
    paths.append(path)
    path = out / "returns.svg"
    svg = line_chart(
        [("return", np.arange(len(returns)), returns.values)],
        "Daily return",
        "trading day",
        "return",
        (returns.dates[0].isoformat(), returns.dates[-1].isoformat()),
    )
    path.write_text(svg, encoding="utf-8")
    paths.append(path)

    for name in sorted(histories):
        hist = histories[name]
        path = out / f"loss_{name}.csv"
        _write_csv(path, ["epoch", "train_loss", "val_loss"], [(e, _fmt(t), _fmt(v)) for e, t, v in hist.rows()])
        paths.append(path)
        epochs = np.arange(1, hist.epochs + 1)
        val = [np.nan if v is None else v for v in hist.val_loss]
        svg = line_chart(
            [("train", epochs, hist.train_loss), ("validation", epochs, val)],
            f"{name} loss",
            "epoch",
            "MSE",
        )
        path = out / f"loss_{name}.svg"
        path.write_text(svg, encoding="utf-8")
        paths.append(path)
    return paths
