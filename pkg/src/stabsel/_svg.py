"""Static SVG rendering of stability paths.

The document contains exactly one ``<path>`` element per variable plus a
single dashed threshold ``<line>``, so its structure is machine-checkable;
stable variables are drawn on top in a distinct color.
"""

from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

WIDTH, HEIGHT = 720, 440
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 20, 50
STABLE_COLOR = "#c62828"
OTHER_COLOR = "#9e9e9e"


def _x(g: int, G: int) -> float:
    span = WIDTH - MARGIN_L - MARGIN_R
    return MARGIN_L + (span * g / max(1, G - 1) if G > 1 else span / 2)


def _y(pi: float) -> float:
    return MARGIN_T + (1.0 - pi) * (HEIGHT - MARGIN_T - MARGIN_B)


def stability_path_svg(pi_hat: np.ndarray, threshold: float, stable, names, grid_values) -> str:
    """Render frequency paths; x runs from the largest penalty leftward."""
    p, G = pi_hat.shape
    stable = set(int(k) for k in stable)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="white" stroke="#444"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{_y(tick) + 4:.1f}" text-anchor="end" '
            f'font-size="11" fill="#444">{tick:g}</text>'
        )
    parts.append(
        f'<text x="{MARGIN_L}" y="{HEIGHT - 18}" font-size="12" fill="#444">'
        f"penalty {grid_values[0]:.4g} (left) down to {grid_values[-1]:.4g} (right); "
        f"selection frequency on the vertical axis</text>"
    )
    order = [k for k in range(p) if k not in stable] + sorted(stable)
    for k in order:
        points = " L ".join(f"{_x(g, G):.2f} {_y(pi_hat[k, g]):.2f}" for g in range(G))
        color = STABLE_COLOR if k in stable else OTHER_COLOR
        width = "2" if k in stable else "1"
        title = escape(str(names[k]))
        parts.append(
            f'<path fill="none" stroke="{color}" stroke-width="{width}" '
            f'data-variable="{title}" d="M {points}"/>'
        )
    y_thr = _y(threshold)
    parts.append(
        f'<line x1="{MARGIN_L}" y1="{y_thr:.2f}" x2="{WIDTH - MARGIN_R}" y2="{y_thr:.2f}" '
        f'stroke="#1565c0" stroke-width="1.5" stroke-dasharray="6,4"/>'
    )
    parts.append(
        f'<text x="{WIDTH - MARGIN_R - 4}" y="{y_thr - 6:.2f}" text-anchor="end" '
        f'font-size="11" fill="#1565c0">threshold {threshold:g}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
