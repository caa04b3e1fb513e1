"""Dependency-free SVG rendering of overlap heatmaps and stability landscapes."""

import math
from typing import Any, List, Optional, Sequence

from ..core.schema import Schema
from ..core.separability import OverlapMatrix
from ..core.stability import StabilityRow

# 11-bin viridis
PALETTE = [
    "#440154", "#482878", "#3E4989", "#31688E", "#26828E",
    "#1F9E89", "#35B779", "#6DCD59", "#B4DE2C", "#FDE725",
    "#FFF7B2",
]
ABSENT_FILL = 'url(#hatch)'
MASKED_FILL = '#EEEEEE'
FONT = 'font-family="Helvetica, Arial, sans-serif"'


def esc(s: Any) -> str:
    s = "" if s is None else str(s)
    return (
        s.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
        .replace("'", "&#39;")
    )


def clamp01(x: float) -> float:
    return max(0.0, min(1.0, x))


def value_to_color(v: float, vmin: float = 0.0, vmax: float = 1.0, palette: Sequence[str] = PALETTE) -> str:
    if vmax <= vmin:
        return palette[0]
    t = clamp01((v - vmin) / (vmax - vmin))
    idx = int(math.floor(t * (len(palette) - 1) + 1e-12))
    return palette[idx]


class SvgCanvas:
    """Accumulates SVG elements; coordinates are written with fixed precision."""

    def __init__(self, width: float, height: float, title: str = ''):
        self.width = width
        self.height = height
        self.svg = (
            f'<svg version="1.1" width="{width:.0f}" height="{height:.0f}" '
            f'viewBox="0 0 {width:.0f} {height:.0f}" xmlns="http://www.w3.org/2000/svg">\n'
        )
        if title:
            self.svg += f'<title>{esc(title)}</title>\n'

    def defs(self, content: str) -> None:
        self.svg += f'<defs>\n{content}</defs>\n'

    def group_start(self, css_class: str = '', title: str = '') -> None:
        self.svg += f'<g class="{esc(css_class)}">\n' if css_class else '<g>\n'
        if title:
            self.svg += f'<title>{esc(title)}</title>\n'

    def group_end(self) -> None:
        self.svg += '</g>\n'

    def filled_rectangle(self, x1: float, y1: float, x2: float, y2: float, fill: str, extra: str = '') -> None:
        self.svg += (f'<rect x="{x1:.1f}" y="{y1:.1f}" width="{x2 - x1:.1f}" height="{y2 - y1:.1f}" '
                     f'fill="{fill}" {extra}/>\n')

    def outline(self, x1: float, y1: float, x2: float, y2: float, stroke: str = '#000000', width: float = 1.5) -> None:
        self.filled_rectangle(x1, y1, x2, y2, 'none', f'stroke="{stroke}" stroke-width="{width:.1f}"')

    def line(self, x1: float, y1: float, x2: float, y2: float, stroke: str = '#999999') -> None:
        self.svg += f'<line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" stroke="{stroke}"/>\n'

    def circle(self, cx: float, cy: float, r: float, fill: str, extra: str = '') -> None:
        self.svg += f'<circle cx="{cx:.1f}" cy="{cy:.1f}" r="{r:.1f}" fill="{fill}" {extra}/>\n'

    def text(self, x: float, y: float, string: str, size: int = 11, anchor: str = 'start', extra: str = '') -> None:
        self.svg += (f'<text x="{x:.1f}" y="{y:.1f}" font-size="{size}" text-anchor="{anchor}" '
                     f'{FONT} {extra}>{esc(string)}</text>\n')

    def get_svg(self) -> str:
        return f"{self.svg}</svg>\n"


def _category_runs(criterion_ids: Sequence[str], schema: Schema) -> List[List[int]]:
    runs: List[List[int]] = []
    previous: Optional[str] = None
    for i, q in enumerate(criterion_ids):
        category = schema.category_of(q)
        if category != previous:
            runs.append([])
            previous = category
        runs[-1].append(i)
    return runs


def render_heatmap(matrix: OverlapMatrix, schema: Schema, cell: float = 40.0) -> str:
    """Q x Q CondOv grid: rows are antecedents, columns consequents.

    Absent cells are hatched, masked within-category cells are light grey
    without a value, and each within-category block is outlined.
    """
    ids = matrix.criterion_ids
    n = len(ids)
    left, top, legend = 70.0, 70.0, 60.0
    canvas = SvgCanvas(left + n * cell + legend + 20, top + n * cell + 40,
                       title=f"Conditional overlap at t={matrix.threshold}")
    canvas.defs(
        '<pattern id="hatch" width="6" height="6" patternUnits="userSpaceOnUse" '
        'patternTransform="rotate(45)">\n'
        '<rect width="6" height="6" fill="#FFFFFF"/>\n'
        '<line x1="0" y1="0" x2="0" y2="6" stroke="#9E9E9E" stroke-width="2"/>\n'
        '</pattern>\n'
    )
    canvas.text(left + n * cell / 2, 20, f"CondOv(row → column), t={matrix.threshold}", size=13, anchor='middle')

    for j, q in enumerate(ids):
        canvas.text(left + (j + 0.5) * cell, top - 8, q, anchor='middle')
    for i, q in enumerate(ids):
        canvas.text(left - 8, top + (i + 0.5) * cell + 4, q, anchor='end')

    canvas.group_start('cells')
    for i, source in enumerate(ids):
        for j, target in enumerate(ids):
            x, y = left + j * cell, top + i * cell
            value = matrix.entries[i][j]
            if value is None:
                canvas.filled_rectangle(x, y, x + cell, y + cell, ABSENT_FILL, 'class="absent"')
            elif matrix.is_masked(source, target):
                canvas.filled_rectangle(x, y, x + cell, y + cell, MASKED_FILL, 'class="masked"')
            else:
                canvas.filled_rectangle(x, y, x + cell, y + cell, value_to_color(value))
                ink = '#000000' if value >= 0.6 else '#FFFFFF'
                canvas.text(x + cell / 2, y + cell / 2 + 4, f"{value:.2f}", size=10, anchor='middle',
                            extra=f'fill="{ink}"')
    canvas.group_end()

    canvas.group_start('blocks')
    for run in _category_runs(ids, schema):
        start, end = run[0], run[-1] + 1
        canvas.outline(left + start * cell, top + start * cell, left + end * cell, top + end * cell)
    canvas.group_end()

    x0 = left + n * cell + 20
    for b, color in enumerate(reversed(PALETTE)):
        y = top + b * (n * cell / len(PALETTE))
        canvas.filled_rectangle(x0, y, x0 + 14, y + n * cell / len(PALETTE), color)
    canvas.text(x0 + 18, top + 8, '1.0', size=10)
    canvas.text(x0 + 18, top + n * cell, '0.0', size=10)
    return canvas.get_svg()


def render_stability_landscape(rows: Sequence[StabilityRow], width: float = 520, height: float = 420) -> str:
    """Scatter of activation (x) against near-tie rate (y), coloured by unanimity.

    Criteria with an empty focus set are left out and named in a note.
    """
    shown = [r for r in rows if r.focus_size > 0]
    omitted = [r.criterion_id for r in rows if r.focus_size == 0]
    threshold = rows[0].threshold if rows else 0
    left, right, top, bottom = 60.0, 90.0, 40.0, 60.0
    plot_w, plot_h = width - left - right, height - top - bottom
    x_max = max([r.activation for r in shown] + [0.05])
    x_max = math.ceil(x_max * 10) / 10

    canvas = SvgCanvas(width, height, title=f"Stability landscape at t={threshold}")
    canvas.text(left + plot_w / 2, 22, f"Activation vs near-tie rate, t={threshold}", size=13, anchor='middle')
    canvas.line(left, top + plot_h, left + plot_w, top + plot_h, '#333333')
    canvas.line(left, top, left, top + plot_h, '#333333')
    for tick in range(5):
        fx = tick / 4
        canvas.text(left + fx * plot_w, top + plot_h + 16, f"{fx * x_max * 100:.0f}%", size=10, anchor='middle')
        canvas.text(left - 6, top + plot_h - fx * plot_h + 4, f"{fx * 100:.0f}%", size=10, anchor='end')
    canvas.text(left + plot_w / 2, height - 20, 'Activation rate', anchor='middle')
    canvas.text(16, top + plot_h / 2, 'NT', anchor='middle')

    canvas.group_start('points')
    for r in shown:
        cx = left + (r.activation / x_max) * plot_w
        cy = top + plot_h - r.nt * plot_h
        canvas.circle(cx, cy, 6, value_to_color(r.uy), 'stroke="#333333" stroke-width="0.8"')
        canvas.text(cx + 8, cy - 6, r.criterion_id, size=10)
    canvas.group_end()

    x0 = left + plot_w + 24
    for b, color in enumerate(reversed(PALETTE)):
        y = top + b * (plot_h / len(PALETTE))
        canvas.filled_rectangle(x0, y, x0 + 12, y + plot_h / len(PALETTE), color)
    canvas.text(x0 + 16, top + 8, 'UY 1', size=10)
    canvas.text(x0 + 16, top + plot_h, 'UY 0', size=10)

    if omitted:
        canvas.text(left, height - 4, f"Omitted (empty focus set): {', '.join(omitted)}", size=10)
    return canvas.get_svg()
