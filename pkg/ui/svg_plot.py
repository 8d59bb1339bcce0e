"""SVG line plots for experiment outputs, emitted as plain text"""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)


@dataclass
class Series:
    """One polyline"""
    label: str
    x: Sequence[float]
    y: Sequence[float]


class LinePlot:
    """Creates a static line chart of one or more series"""

    # Colors cycled across series
    SERIES_COLORS = ["#2196F3", "#ff4d4d", "#4CAF50", "#9C27B0", "#ffa500", "#666666"]

    MARGIN_LEFT = 80
    MARGIN_RIGHT = 20
    MARGIN_TOP = 40
    MARGIN_BOTTOM = 50

    def __init__(self, title: str, x_label: str, y_label: str, log_y: bool = False,
                 width: int = 640, height: int = 400):
        self.title = title
        self.x_label = x_label
        self.y_label = y_label
        self.log_y = log_y
        self.width = width
        self.height = height
        self.series: List[Series] = []

    def add(self, label: str, x: Sequence[float], y: Sequence[float]) -> "LinePlot":
        self.series.append(Series(label, list(x), list(y)))
        return self

    def _points(self, s: Series):
        x = np.asarray(s.x, dtype=float)
        y = np.asarray(s.y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if self.log_y:
            keep &= y > 0
            y = np.where(keep, np.log10(np.where(y > 0, y, 1.0)), np.nan)
        return x[keep], y[keep]

    def _bounds(self):
        xs, ys = [], []
        for s in self.series:
            x, y = self._points(s)
            xs.append(x)
            ys.append(y)
        x = np.concatenate(xs) if xs else np.array([])
        y = np.concatenate(ys) if ys else np.array([])
        if x.size == 0:
            return 0.0, 1.0, 0.0, 1.0
        x0, x1, y0, y1 = x.min(), x.max(), y.min(), y.max()
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        if y1 == y0:
            pad = max(abs(y0) * 0.05, 1e-12)
            y0, y1 = y0 - pad, y1 + pad
        return float(x0), float(x1), float(y0), float(y1)

    def to_svg(self) -> str:
        """Render the chart"""
        w, h = self.width, self.height
        left, top = self.MARGIN_LEFT, self.MARGIN_TOP
        plot_w = w - left - self.MARGIN_RIGHT
        plot_h = h - top - self.MARGIN_BOTTOM
        x0, x1, y0, y1 = self._bounds()

        def sx(v):
            return left + (v - x0) / (x1 - x0) * plot_w

        def sy(v):
            return top + plot_h - (v - y0) / (y1 - y0) * plot_h

        parts = [
            f'<svg width="{w}" height="{h}" xmlns="http://www.w3.org/2000/svg">',
            f'<rect width="{w}" height="{h}" fill="#ffffff"/>',
            f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
            f'fill="none" stroke="#333" stroke-width="1"/>',
            f'<text x="{w / 2:.1f}" y="{top - 15}" font-size="14" text-anchor="middle" '
            f'font-family="Arial">{self.title}</text>',
            f'<text x="{left + plot_w / 2:.1f}" y="{h - 10}" font-size="12" text-anchor="middle" '
            f'font-family="Arial">{self.x_label}</text>',
            f'<text x="15" y="{top + plot_h / 2:.1f}" font-size="12" text-anchor="middle" '
            f'font-family="Arial" transform="rotate(-90 15 {top + plot_h / 2:.1f})">'
            f'{self.y_label}{" (log10)" if self.log_y else ""}</text>',
        ]

        # Axis ticks
        for v in np.linspace(x0, x1, 5):
            parts.append(
                f'<text x="{sx(v):.1f}" y="{top + plot_h + 18}" font-size="10" '
                f'text-anchor="middle" font-family="Arial">{v:.4g}</text>'
            )
        for v in np.linspace(y0, y1, 5):
            parts.append(
                f'<text x="{left - 6}" y="{sy(v) + 4:.1f}" font-size="10" '
                f'text-anchor="end" font-family="Arial">{v:.4g}</text>'
            )

        for idx, s in enumerate(self.series):
            color = self.SERIES_COLORS[idx % len(self.SERIES_COLORS)]
            x, y = self._points(s)
            if x.size:
                coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in zip(x, y))
                parts.append(
                    f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="2"/>'
                )
            # Legend
            item_y = top + 15 + idx * 18
            parts.append(
                f'<line x1="{left + plot_w - 120}" y1="{item_y}" x2="{left + plot_w - 100}" '
                f'y2="{item_y}" stroke="{color}" stroke-width="2"/>'
            )
            parts.append(
                f'<text x="{left + plot_w - 95}" y="{item_y + 4}" font-size="11" '
                f'font-family="Arial">{s.label}</text>'
            )

        parts.append('</svg>')
        return "\n".join(parts) + "\n"

    def save(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_svg(), encoding="utf-8")
        logger.info("wrote %s", path)
        return path


def plot_columns(rows: Sequence[dict], x_key: str, y_keys: Sequence[str], title: str,
                 log_y: bool = False, y_label: Optional[str] = None) -> LinePlot:
    """One series per y column of a list of row dicts"""
    chart = LinePlot(title, x_key, y_label or ", ".join(y_keys), log_y=log_y)
    x = [row[x_key] for row in rows]
    for key in y_keys:
        chart.add(key, x, [np.nan if row.get(key) in (None, "") else row[key] for row in rows])
    return chart
