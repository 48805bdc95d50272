"""Deterministic SVG scatter plots of patch layouts and selections."""

from __future__ import annotations

from .errors import InvalidInputError

PALETTE = [
    "#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee",
    "#aa3377", "#bbbbbb", "#cc6644", "#44aa99", "#882255",
]

_SIZE = 480
_PAD = 36


def _sx(x: float) -> str:
    return f"{_PAD + x * (_SIZE - 2 * _PAD):.2f}"


def _sy(y: float) -> str:
    # flip so y grows upward in the plot
    return f"{_PAD + (1.0 - y) * (_SIZE - 2 * _PAD):.2f}"


def svg_scatter(patches, selected_ids=(), title="patch layout") -> str:
    """Render patches colored by class, selected ids ringed in black."""
    if not patches:
        raise InvalidInputError("nothing to plot")
    selected = set(int(i) for i in selected_ids)
    classes = sorted({p.label for p in patches})
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_SIZE}" height="{_SIZE}" '
        f'viewBox="0 0 {_SIZE} {_SIZE}">',
        f'<rect width="{_SIZE}" height="{_SIZE}" fill="white"/>',
        f'<rect x="{_PAD}" y="{_PAD}" width="{_SIZE - 2 * _PAD}" height="{_SIZE - 2 * _PAD}" '
        f'fill="none" stroke="#888888" stroke-width="1"/>',
        f'<text x="{_PAD}" y="{_PAD - 12}" font-family="monospace" font-size="13">{title}</text>',
    ]
    for p in patches:
        color = PALETTE[p.label % len(PALETTE)]
        parts.append(
            f'<circle cx="{_sx(p.coord[0])}" cy="{_sy(p.coord[1])}" r="3" '
            f'fill="{color}" fill-opacity="0.55"/>'
        )
    for p in patches:
        if p.id in selected:
            parts.append(
                f'<circle cx="{_sx(p.coord[0])}" cy="{_sy(p.coord[1])}" r="6" '
                f'fill="none" stroke="black" stroke-width="1.6"/>'
            )
    for k, c in enumerate(classes):
        y = _PAD + 14 + 16 * k
        parts.append(
            f'<rect x="{_SIZE - _PAD - 66}" y="{y - 9}" width="10" height="10" '
            f'fill="{PALETTE[c % len(PALETTE)]}"/>'
        )
        parts.append(
            f'<text x="{_SIZE - _PAD - 52}" y="{y}" font-family="monospace" '
            f'font-size="12">class {c}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)


def write_svg_scatter(path, patches, selected_ids=(), title="patch layout") -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(svg_scatter(patches, selected_ids, title))
        fh.write("\n")
