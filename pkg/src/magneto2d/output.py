"""Deterministic SVG rendering of trajectories."""
from __future__ import annotations

import math
from pathlib import Path

import numpy as np

SIZE = 480
MARGIN = 20
MAX_POINTS = 20000


def _boundary_points(domain, count=720):
    if domain is None:
        return None
    if isinstance(domain, (int, float)):
        t = np.linspace(0.0, 2.0 * math.pi, count + 1)
        return np.column_stack([domain * np.cos(t), domain * np.sin(t)])
    s = np.linspace(0.0, domain.length, count + 1)
    return np.array([domain.gamma(x) for x in s])


def _path(points, to_px) -> str:
    parts = []
    for i, (x, y) in enumerate(points):
        px, py = to_px(x, y)
        parts.append(f"{'M' if i == 0 else 'L'}{px:.3f} {py:.3f}")
    return " ".join(parts)


def render_svg(q: np.ndarray, domain=1.0, title: str = "") -> str:
    """SVG text of the trajectory ``q`` (shape ``(N, 2)``) inside ``domain``.

    Coordinates are printed with fixed precision, so equal inputs give
    byte-identical output.
    """
    q = np.asarray(q, dtype=float)
    if len(q) > MAX_POINTS:
        idx = np.unique(np.linspace(0, len(q) - 1, MAX_POINTS).round().astype(int))
        q = q[idx]
    boundary = _boundary_points(domain)
    pool = q if boundary is None else np.vstack([q, boundary])
    lo, hi = pool.min(axis=0), pool.max(axis=0)
    span = float(max(hi - lo)) or 1.0
    scale = (SIZE - 2 * MARGIN) / span
    cx, cy = (lo + hi) / 2.0

    def to_px(x, y):
        return SIZE / 2 + (x - cx) * scale, SIZE / 2 - (y - cy) * scale

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" '
        f'viewBox="0 0 {SIZE} {SIZE}">',
        f"<title>{_escape(title)}</title>",
        f'<rect width="{SIZE}" height="{SIZE}" fill="white"/>',
    ]
    if boundary is not None:
        lines.append(f'<path d="{_path(boundary, to_px)} Z" fill="none" stroke="black" '
                     'stroke-width="1.5"/>')
    if len(q):
        lines.append(f'<path d="{_path(q, to_px)}" fill="none" stroke="#1f5fa8" '
                     'stroke-width="0.6"/>')
        sx, sy = to_px(*q[0])
        lines.append(f'<circle cx="{sx:.3f}" cy="{sy:.3f}" r="3" fill="#2a9d3a"/>')
        ex, ey = to_px(*q[-1])
        lines.append(f'<circle cx="{ex:.3f}" cy="{ey:.3f}" r="3" fill="#c0392b"/>')
    lines.append("</svg>")
    return "\n".join(lines) + "\n"


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def write_svg(path, q, domain=1.0, title: str = "") -> None:
    Path(path).write_text(render_svg(q, domain, title), encoding="utf-8")
