"""Deterministic SVG figures: histogram grids, class heatmaps and vowel charts.

Every renderer returns UTF-8 bytes.  Coordinates are written with a fixed
number of decimals and nothing depends on dict or set iteration order, so
identical inputs give byte-identical files.  Scale and palette choices go
into an XML comment at the top of each figure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence
from xml.sax.saxutils import escape, quoteattr

from .boundary import HISTOGRAM_EDGES, HISTOGRAM_LIMIT_MS, DiffStats, HistogramResult
from .errors import ShapeMismatch
from .vowels import VowelEllipse

FIGURE_KINDS = ("histogram_grid", "heatmap_means", "heatmap_stds", "vowel_chart")

# Tableau-like categorical palette; models take colours in declaration order
PALETTE = (
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
)
GOLD_COLOR = "#000000"
MISSING_FILL = "#e0e0e0"
MINUS = "−"
FONT = "DejaVu Sans, Arial, sans-serif"


@dataclass(frozen=True)
class FigureSpec:
    """Layout of one figure.

    ``rows`` are model tags and ``cols`` setting tags.  Panel sizes are in
    SVG user units.
    """

    kind: str
    rows: tuple[str, ...]
    cols: tuple[str, ...] = ("",)
    panel_width: float = 160.0
    panel_height: float = 110.0
    palette: tuple[str, ...] = PALETTE
    title: str = ""
    metadata: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise ValueError(f"kind must be one of {FIGURE_KINDS}, got {self.kind!r}")
        object.__setattr__(self, "rows", tuple(self.rows))
        object.__setattr__(self, "cols", tuple(self.cols))
        if not self.rows or not self.cols:
            raise ValueError("rows and cols must be non-empty")
        if not self.palette:
            raise ValueError("palette must be non-empty")

    def color(self, model: str) -> str:
        i = self.rows.index(model) if model in self.rows else len(self.rows)
        return self.palette[i % len(self.palette)]


# low-level helpers


def _n(x: float) -> str:
    """Coordinate text: two decimals, no negative zero."""
    s = f"{x:.2f}"
    return "0.00" if s == "-0.00" else s


def format_ms(value: float) -> str:
    """One decimal, trailing ``.0`` dropped, typographic minus: ``-12.0`` -> ``−12``."""
    s = f"{value:.1f}"
    if s.endswith(".0"):
        s = s[:-2]
    if s in ("-0", "-0.0"):
        s = "0"
    return s.replace("-", MINUS)


def _text(x, y, content, cls="", size=10, anchor="start", extra=""):
    c = f" class={quoteattr(cls)}" if cls else ""
    return (
        f'<text{c} x="{_n(x)}" y="{_n(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>'
        f"{escape(str(content))}</text>"
    )


def _comment(kind: str, meta: Mapping[str, str]) -> str:
    items = [f"kind={kind}"] + [f"{k}={meta[k]}" for k in sorted(meta)]
    body = "; ".join(items).replace("--", "- -")
    return f"<!-- aligneval figure: {body} -->"


def _document(width: float, height: float, kind: str, meta: Mapping[str, str], body: list[str]) -> bytes:
    head = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        _comment(kind, meta),
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{_n(width)}" '
        f'height="{_n(height)}" viewBox="0 0 {_n(width)} {_n(height)}" font-family={quoteattr(FONT)}>',
        f'<rect x="0" y="0" width="{_n(width)}" height="{_n(height)}" fill="#ffffff"/>',
    ]
    return ("\n".join(head + body + ["</svg>"]) + "\n").encode("utf-8")


def _hex(c: str) -> tuple[int, int, int]:
    c = c.lstrip("#")
    return int(c[0:2], 16), int(c[2:4], 16), int(c[4:6], 16)


def _mix(a: str, b: str, t: float) -> str:
    t = min(1.0, max(0.0, t))
    ra, rb = _hex(a), _hex(b)
    return "#" + "".join(f"{round(x + (y - x) * t):02x}" for x, y in zip(ra, rb))


def _is_dark(c: str) -> bool:
    r, g, b = _hex(c)
    return 0.299 * r + 0.587 * g + 0.114 * b < 128


# histogram grid

_MARGIN_LEFT = 70.0
_MARGIN_TOP = 40.0
_AXIS_SPACE = 32.0


def render_histogram_grid(results: Sequence[Sequence[HistogramResult | None]], spec: FigureSpec) -> bytes:
    """One panel per (model, setting), models down the side and settings across.

    Each panel carries the excluded percentage in its top-left corner with
    the in-range token count under it.  All panels share the [-205, 205] ms
    x-axis; bar heights are scaled to each panel's tallest bin.
    """
    if len(results) != len(spec.rows) or any(len(row) != len(spec.cols) for row in results):
        shape = f"{len(results)}x{'/'.join(str(len(r)) for r in results)}"
        raise ShapeMismatch(f"results are {shape}, figure expects {len(spec.rows)}x{len(spec.cols)}")
    pw, ph = spec.panel_width, spec.panel_height
    gap = 12.0
    width = _MARGIN_LEFT + len(spec.cols) * (pw + gap) + 10
    height = _MARGIN_TOP + len(spec.rows) * (ph + gap) + _AXIS_SPACE + 10
    span = 2 * HISTOGRAM_LIMIT_MS

    def px(ms: float, x0: float) -> float:
        return x0 + (ms + HISTOGRAM_LIMIT_MS) / span * pw

    body = []
    if spec.title:
        body.append(_text(width / 2, 16, spec.title, "title", 13, "middle"))
    for j, setting in enumerate(spec.cols):
        body.append(_text(_MARGIN_LEFT + j * (pw + gap) + pw / 2, _MARGIN_TOP - 8, setting, "col-label", 11, "middle"))
    for i, model in enumerate(spec.rows):
        y0 = _MARGIN_TOP + i * (ph + gap)
        body.append(_text(_MARGIN_LEFT - 6, y0 + ph / 2, model, "row-label", 11, "end"))
        for j, setting in enumerate(spec.cols):
            x0 = _MARGIN_LEFT + j * (pw + gap)
            res = results[i][j]
            body.append(
                f'<g class="panel" data-model={quoteattr(model)} data-setting={quoteattr(setting)}>'
            )
            body.append(
                f'<rect class="frame" x="{_n(x0)}" y="{_n(y0)}" width="{_n(pw)}" height="{_n(ph)}" '
                f'fill="none" stroke="#888888" stroke-width="0.5"/>'
            )
            if res is None or res.total == 0:
                body.append(f'<rect x="{_n(x0)}" y="{_n(y0)}" width="{_n(pw)}" height="{_n(ph)}" fill="{MISSING_FILL}"/>')
                body.append(_text(x0 + pw / 2, y0 + ph / 2 + 4, "no data", "no-data", 11, "middle"))
            else:
                top = max(res.counts) if res.counts else 0
                color = spec.color(model)
                for k, c in enumerate(res.counts):
                    if c == 0 or top == 0:
                        continue
                    bh = c / top * (ph - 30)
                    xa, xb = px(res.bin_edges[k], x0), px(res.bin_edges[k + 1], x0)
                    body.append(
                        f'<rect class="bar" x="{_n(xa)}" y="{_n(y0 + ph - bh)}" width="{_n(xb - xa)}" '
                        f'height="{_n(bh)}" fill="{color}"/>'
                    )
                body.append(_text(x0 + 4, y0 + 12, f"{res.excluded_pct:.1f}%", "excluded", 10))
                body.append(_text(x0 + 4, y0 + 24, str(res.in_range_count), "count", 10))
            body.append(
                f'<line class="zero" x1="{_n(px(0, x0))}" y1="{_n(y0)}" x2="{_n(px(0, x0))}" '
                f'y2="{_n(y0 + ph)}" stroke="#444444" stroke-width="0.5" stroke-dasharray="2,2"/>'
            )
            body.append("</g>")
    # shared x-axis under the bottom row
    y_axis = _MARGIN_TOP + len(spec.rows) * (ph + gap) - gap
    for j in range(len(spec.cols)):
        x0 = _MARGIN_LEFT + j * (pw + gap)
        body.append(
            f'<line class="axis" x1="{_n(x0)}" y1="{_n(y_axis)}" x2="{_n(x0 + pw)}" y2="{_n(y_axis)}" stroke="#000000"/>'
        )
        for tick in (-200, -100, 0, 100, 200):
            xt = px(tick, x0)
            body.append(f'<line x1="{_n(xt)}" y1="{_n(y_axis)}" x2="{_n(xt)}" y2="{_n(y_axis + 4)}" stroke="#000000"/>')
            body.append(_text(xt, y_axis + 14, format_ms(tick), "tick", 8, "middle"))
    body.append(_text(width / 2, height - 6, "onset difference (ms)", "axis-label", 10, "middle"))
    meta = {
        "x_range_ms": f"[{format_ms(HISTOGRAM_EDGES[0])}, {format_ms(HISTOGRAM_EDGES[-1])}]",
        "bin_width_ms": "10",
        "rows": ",".join(spec.rows),
        "cols": ",".join(spec.cols),
        **spec.metadata,
    }
    return _document(width, height, spec.kind, meta, body)


# heatmaps

DIVERGING = ("#2166ac", "#f7f7f7", "#b2182b")  # negative, zero, positive
SEQUENTIAL = ("#fff7ec", "#7f0000")  # zero, maximum


def render_heatmap(
    stats: Sequence[DiffStats],
    kind: str,
    spec: FigureSpec,
    classes: Sequence[str] | None = None,
) -> bytes:
    """Natural classes down the side, models (``spec.rows``) across.

    ``kind`` is ``"means"`` (diverging scale centred on 0) or ``"stds"``
    (sequential, 0 lightest).  Missing cells are grey with a dash; a
    duplicated (class, model) cell raises ShapeMismatch.
    """
    if kind not in ("means", "stds"):
        raise ValueError("kind must be 'means' or 'stds'")
    cells: dict[tuple[str, str], float] = {}
    seen_classes: list[str] = []
    for s in stats:
        if s.model not in spec.rows:
            raise ShapeMismatch(f"model {s.model!r} is not among the figure rows {spec.rows}")
        key = (s.group, s.model)
        if key in cells:
            raise ShapeMismatch(f"two values for class {s.group!r}, model {s.model!r}")
        cells[key] = s.mean_ms if kind == "means" else s.std_ms
        if s.group not in seen_classes:
            seen_classes.append(s.group)
    rows = list(classes) if classes is not None else seen_classes
    models = list(spec.rows)

    values = list(cells.values())
    if kind == "means":
        limit = max((abs(v) for v in values), default=0.0) or 1.0
        scale_note = f"diverging {DIVERGING[0]}..{DIVERGING[1]}..{DIVERGING[2]}, symmetric limit {format_ms(limit)} ms"

        def fill(v: float) -> str:
            t = v / limit
            return _mix(DIVERGING[1], DIVERGING[2], t) if t >= 0 else _mix(DIVERGING[1], DIVERGING[0], -t)
    else:
        limit = max(values, default=0.0) or 1.0
        scale_note = f"sequential {SEQUENTIAL[0]}..{SEQUENTIAL[1]}, 0 to {format_ms(limit)} ms"

        def fill(v: float) -> str:
            return _mix(SEQUENTIAL[0], SEQUENTIAL[1], v / limit)

    cw, ch = 64.0, 26.0
    left, top = 130.0, 56.0
    width = left + cw * len(models) + 20
    height = top + ch * max(len(rows), 1) + 20
    body = []
    if spec.title:
        body.append(_text(width / 2, 18, spec.title, "title", 13, "middle"))
    for j, m in enumerate(models):
        body.append(_text(left + j * cw + cw / 2, top - 8, m, "col-label", 10, "middle"))
    for i, cls in enumerate(rows):
        y = top + i * ch
        body.append(_text(left - 6, y + ch / 2 + 4, cls, "row-label", 10, "end"))
        for j, m in enumerate(models):
            x = left + j * cw
            v = cells.get((cls, m))
            if v is None:
                body.append(
                    f'<g class="cell missing" data-class={quoteattr(cls)} data-model={quoteattr(m)}>'
                    f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(cw)}" height="{_n(ch)}" fill="{MISSING_FILL}" stroke="#ffffff"/>'
                    + _text(x + cw / 2, y + ch / 2 + 4, "–", "value", 10, "middle")
                    + "</g>"
                )
                continue
            color = fill(v)
            ink = "#ffffff" if _is_dark(color) else "#000000"
            body.append(
                f'<g class="cell" data-class={quoteattr(cls)} data-model={quoteattr(m)}>'
                f'<rect x="{_n(x)}" y="{_n(y)}" width="{_n(cw)}" height="{_n(ch)}" fill="{color}" stroke="#ffffff"/>'
                + _text(x + cw / 2, y + ch / 2 + 4, format_ms(v), "value", 10, "middle", f' fill="{ink}"')
                + "</g>"
            )
    meta = {"scale": scale_note, "unit": "ms", "value": "mean" if kind == "means" else "population std", **spec.metadata}
    return _document(width, height, spec.kind, meta, body)


# vowel charts

DEFAULT_F1_RANGE = (200.0, 1000.0)
DEFAULT_F2_RANGE = (500.0, 3000.0)


def _nice_range(lo: float, hi: float, step: float) -> tuple[float, float]:
    return math.floor(lo / step) * step, math.ceil(hi / step) * step


def render_vowel_chart(
    ellipses: Sequence[VowelEllipse],
    gold: Sequence[VowelEllipse] = (),
    spec: FigureSpec | None = None,
) -> bytes:
    """F2 on the x-axis falling to the right, F1 on the y-axis falling upward.

    Gold ellipses are drawn in solid black, model ellipses in the model's
    palette colour.  Every category gets its IPA glyph at the centre; the
    ellipse itself is drawn only when it rests on at least two tokens.
    """
    if spec is None:
        models = []
        for e in ellipses:
            if e.model not in models:
                models.append(e.model)
        spec = FigureSpec("vowel_chart", tuple(models) or ("",))
    everything = list(gold) + list(ellipses)
    if everything:
        f2s = [e.center[0] + s * e.semi_axes[0] for e in everything for s in (-1, 1)]
        f1s = [e.center[1] + s * e.semi_axes[1] for e in everything for s in (-1, 1)]
        f2_lo, f2_hi = _nice_range(min(f2s) - 100, max(f2s) + 100, 250)
        f1_lo, f1_hi = _nice_range(min(f1s) - 50, max(f1s) + 50, 100)
    else:
        (f1_lo, f1_hi), (f2_lo, f2_hi) = DEFAULT_F1_RANGE, DEFAULT_F2_RANGE

    left, top, pw, ph = 60.0, 40.0, 420.0, 320.0
    width, height = left + pw + 140, top + ph + 50

    def x(f2: float) -> float:
        return left + (f2_hi - f2) / (f2_hi - f2_lo) * pw

    def y(f1: float) -> float:
        return top + (f1 - f1_lo) / (f1_hi - f1_lo) * ph

    body = []
    if spec.title:
        body.append(_text(left + pw / 2, 18, spec.title, "title", 13, "middle"))
    body.append(
        f'<rect class="plot-area" x="{_n(left)}" y="{_n(top)}" width="{_n(pw)}" height="{_n(ph)}" '
        f'fill="none" stroke="#000000"/>'
    )
    step2 = 250.0 if f2_hi - f2_lo <= 2500 else 500.0
    t = f2_lo
    while t <= f2_hi + 1e-9:
        body.append(f'<line x1="{_n(x(t))}" y1="{_n(top)}" x2="{_n(x(t))}" y2="{_n(top - 4)}" stroke="#000000"/>')
        body.append(_text(x(t), top - 7, f"{t:.0f}", "tick", 8, "middle"))
        t += step2
    step1 = 100.0 if f1_hi - f1_lo <= 1000 else 200.0
    t = f1_lo
    while t <= f1_hi + 1e-9:
        body.append(f'<line x1="{_n(left + pw)}" y1="{_n(y(t))}" x2="{_n(left + pw + 4)}" y2="{_n(y(t))}" stroke="#000000"/>')
        body.append(_text(left + pw + 7, y(t) + 3, f"{t:.0f}", "tick", 8))
        t += step1
    body.append(_text(left + pw / 2, height - 12, "F2 (Hz)", "axis-label", 10, "middle"))
    body.append(_text(left + pw + 40, top + ph / 2, "F1 (Hz)", "axis-label", 10, "start"))

    def draw(e: VowelEllipse, color: str, series: str) -> None:
        cx, cy = x(e.center[0]), y(e.center[1])
        rx = e.semi_axes[0] / (f2_hi - f2_lo) * pw
        ry = e.semi_axes[1] / (f1_hi - f1_lo) * ph
        body.append(
            f'<g class="vowel" data-series={quoteattr(series)} data-vowel={quoteattr(e.vowel)} data-n="{e.n}">'
        )
        if e.drawn:
            body.append(
                f'<ellipse cx="{_n(cx)}" cy="{_n(cy)}" rx="{_n(rx)}" ry="{_n(ry)}" fill="none" '
                f'stroke="{color}" stroke-width="1.5"/>'
            )
        body.append(_text(cx, cy + 5, e.vowel, "glyph", 14, "middle", f' fill="{color}"'))
        body.append("</g>")

    for e in gold:
        draw(e, GOLD_COLOR, "gold")
    for e in ellipses:
        draw(e, spec.color(e.model), e.model)

    # legend
    entries = ([("gold", GOLD_COLOR)] if gold else []) + [(m, spec.color(m)) for m in spec.rows if m]
    for k, (label, color) in enumerate(entries):
        ly = top + 10 + k * 16
        body.append(
            f'<line class="legend" x1="{_n(left + pw + 60)}" y1="{_n(ly)}" x2="{_n(left + pw + 80)}" '
            f'y2="{_n(ly)}" stroke="{color}" stroke-width="2"/>'
        )
        body.append(_text(left + pw + 84, ly + 3, label, "legend-label", 9))
    meta = {
        "x": "F2 Hz, decreasing rightward",
        "y": "F1 Hz, decreasing upward",
        "f2_range": f"{f2_lo:.0f}-{f2_hi:.0f}",
        "f1_range": f"{f1_lo:.0f}-{f1_hi:.0f}",
        "semi_axis": "std times multiplier",
        **spec.metadata,
    }
    return _document(width, height, spec.kind, meta, body)
