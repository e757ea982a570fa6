"""Standalone SVG emission for the three explanation views.

Charts are deliberately dependency-free; the numbers behind each plot are
written to adjacent CSV files by the CLI, so the SVGs are presentation only.
"""

from __future__ import annotations

import html

import numpy as np

CLASS_COLORS = ("#d62728", "#17becf", "#2ca02c", "#9467bd")  # per travel class

_WIDTH = 880
_ROW_H = 22
_LABEL_W = 240
_MARGIN = 30


def _header(height: int) -> str:
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{height}" '
        f'font-family="monospace" font-size="12">\n'
        f'<rect width="{_WIDTH}" height="{height}" fill="white"/>\n'
    )


def _text(x, y, s, anchor="start", color="#333"):
    return f'<text x="{x:.1f}" y="{y:.1f}" text-anchor="{anchor}" fill="{color}">{html.escape(str(s))}</text>\n'


def stacked_bar_svg(labels, values: np.ndarray, class_names, title: str) -> str:
    """Horizontal stacked bars: one row per label, one segment per class."""
    values = np.atleast_2d(np.asarray(values, dtype=float))
    n = len(labels)
    height = _MARGIN * 2 + _ROW_H * (n + 2)
    total_max = max(values.sum(axis=1).max(), 1e-12)
    span = _WIDTH - _LABEL_W - 2 * _MARGIN
    parts = [_header(height), _text(_MARGIN, _MARGIN - 8, title)]
    for i, label in enumerate(labels):
        y = _MARGIN + i * _ROW_H
        parts.append(_text(_LABEL_W - 6, y + 14, label, anchor="end"))
        x = _LABEL_W
        for c in range(values.shape[1]):
            w = span * values[i, c] / total_max
            parts.append(
                f'<rect x="{x:.1f}" y="{y + 4}" width="{max(w, 0.0):.2f}" height="{_ROW_H - 8}" '
                f'fill="{CLASS_COLORS[c % len(CLASS_COLORS)]}"/>\n'
            )
            x += w
    y = _MARGIN + (n + 1) * _ROW_H
    x = _LABEL_W
    for c, name in enumerate(class_names):
        parts.append(f'<rect x="{x}" y="{y}" width="12" height="12" fill="{CLASS_COLORS[c % len(CLASS_COLORS)]}"/>\n')
        parts.append(_text(x + 16, y + 11, name))
        x += 150
    parts.append("</svg>\n")
    return "".join(parts)


def beeswarm_svg(labels, phi_rows, value_rows, title: str) -> str:
    """One scatter strip per feature; point color encodes the feature value."""
    n = len(labels)
    height = _MARGIN * 2 + _ROW_H * (n + 1)
    span = _WIDTH - _LABEL_W - 2 * _MARGIN
    all_phi = np.concatenate([np.asarray(p, dtype=float) for p in phi_rows])
    lim = max(float(np.abs(all_phi).max()), 1e-12)
    parts = [_header(height), _text(_MARGIN, _MARGIN - 8, title)]
    mid = _LABEL_W + span / 2
    parts.append(f'<line x1="{mid}" y1="{_MARGIN}" x2="{mid}" y2="{height - _MARGIN}" stroke="#bbb"/>\n')
    for i, label in enumerate(labels):
        y = _MARGIN + i * _ROW_H + _ROW_H / 2
        parts.append(_text(_LABEL_W - 6, y + 4, label, anchor="end"))
        phis = np.asarray(phi_rows[i], dtype=float)
        vals = np.asarray(value_rows[i], dtype=float)
        finite = vals[np.isfinite(vals)]
        lo = finite.min() if finite.size else 0.0
        hi = finite.max() if finite.size else 1.0
        rngv = hi - lo if hi > lo else 1.0
        for p, v in zip(phis, vals):
            x = mid + (p / lim) * (span / 2)
            t = (v - lo) / rngv if np.isfinite(v) else 0.5
            r = int(40 + 200 * t)
            b = int(240 - 200 * t)
            parts.append(f'<circle cx="{x:.1f}" cy="{y:.1f}" r="2.4" fill="rgb({r},60,{b})" fill-opacity="0.65"/>\n')
    parts.append("</svg>\n")
    return "".join(parts)


def waterfall_svg(record, title: str) -> str:
    """Signed contribution bars from the base value to the predicted probability."""
    steps = record.steps
    n = len(steps)
    height = _MARGIN * 2 + _ROW_H * (n + 2)
    span = _WIDTH - _LABEL_W - 2 * _MARGIN
    lows = [record.base] + [s.cumulative for s in steps]
    lo = min(lows)
    hi = max(lows)
    rngv = hi - lo if hi > lo else 1.0

    def xpos(v):
        return _LABEL_W + span * (v - lo) / rngv

    parts = [_header(height), _text(_MARGIN, _MARGIN - 8, title)]
    parts.append(_text(_LABEL_W, _MARGIN + 10, f"base = {record.base:.4f}"))
    prev = record.base
    for i, s in enumerate(steps):
        y = _MARGIN + (i + 1) * _ROW_H
        parts.append(_text(_LABEL_W - 6, y + 14, f"{s.feature} ({s.phi:+.4f})", anchor="end"))
        x0, x1 = sorted((xpos(prev), xpos(s.cumulative)))
        color = "#d62728" if s.phi >= 0 else "#1f77b4"
        parts.append(
            f'<rect x="{x0:.1f}" y="{y + 4}" width="{max(x1 - x0, 0.8):.2f}" height="{_ROW_H - 8}" fill="{color}"/>\n'
        )
        prev = s.cumulative
    y = _MARGIN + (n + 1) * _ROW_H
    parts.append(_text(_LABEL_W, y + 14, f"prediction = {record.endpoint:.4f}"))
    parts.append("</svg>\n")
    return "".join(parts)
