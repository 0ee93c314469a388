from xml.dom import minidom

import pytest

from aligneval.boundary import DiffStats, histogram
from aligneval.errors import ShapeMismatch
from aligneval.report import (
    FigureSpec,
    format_ms,
    render_heatmap,
    render_histogram_grid,
    render_vowel_chart,
)
from aligneval.vowels import VowelEllipse

MODELS = ("m1", "m2", "m3", "m4", "m5")
SETTINGS = ("seen", "unseen", "held-out")


def parse(svg: bytes):
    doc = minidom.parseString(svg)
    assert doc.documentElement.tagName == "svg"
    return doc


def by_class(doc, tag, cls):
    return [e for e in doc.getElementsByTagName(tag) if cls in e.getAttribute("class").split()]


def texts(doc, cls):
    return ["".join(n.data for n in e.childNodes if n.nodeType == n.TEXT_NODE) for e in by_class(doc, "text", cls)]


def grid_results():
    return [[histogram([i * 3.0, -j * 7.0, 300.0 * (i == j)]) for j in range(3)] for i in range(5)]


def test_format_ms():
    assert format_ms(-12.0) == "−12"
    assert format_ms(3.0) == "3"
    assert format_ms(0.0) == "0"
    assert format_ms(2.46) == "2.5"


def test_figure_spec_validation():
    with pytest.raises(ValueError):
        FigureSpec("pie", ("a",))
    with pytest.raises(ValueError):
        FigureSpec("heatmap_means", ())


def test_histogram_grid_panels():
    spec = FigureSpec("histogram_grid", MODELS, SETTINGS)
    doc = parse(render_histogram_grid(grid_results(), spec))
    panels = by_class(doc, "g", "panel")
    assert len(panels) == 15
    assert {(p.getAttribute("data-model"), p.getAttribute("data-setting")) for p in panels} == {
        (m, s) for m in MODELS for s in SETTINGS
    }


def test_histogram_grid_annotations():
    spec = FigureSpec("histogram_grid", ("m",), ("s",))
    doc = parse(render_histogram_grid([[histogram([0.0, 10.0, 250.0, -300.0])]], spec))
    assert texts(doc, "excluded") == ["50.0%"]
    assert texts(doc, "count") == ["2"]
    doc = parse(render_histogram_grid([[histogram([1.0])]], spec))
    assert texts(doc, "excluded") == ["0.0%"]


def test_histogram_grid_no_data():
    spec = FigureSpec("histogram_grid", ("m", "n"), ("s",))
    doc = parse(render_histogram_grid([[None], [histogram([])]], spec))
    assert len(texts(doc, "no-data")) == 2


def test_histogram_grid_shape_checked():
    spec = FigureSpec("histogram_grid", MODELS, SETTINGS)
    with pytest.raises(ShapeMismatch):
        render_histogram_grid(grid_results()[:4], spec)
    with pytest.raises(ShapeMismatch):
        render_histogram_grid([row[:2] for row in grid_results()], spec)


def test_histogram_grid_deterministic():
    spec = FigureSpec("histogram_grid", MODELS, SETTINGS)
    assert render_histogram_grid(grid_results(), spec) == render_histogram_grid(grid_results(), spec)


def stats_rows():
    return [
        DiffStats("m1", "s", "stop", 10, -12.0, 20.0, 22.0),
        DiffStats("m1", "s", "nasal", 4, 3.0, 5.0, 6.0),
        DiffStats("m2", "s", "stop", 7, 0.0, 0.0, 0.0),
    ]


def test_heatmap_labels_and_missing_cell():
    spec = FigureSpec("heatmap_means", ("m1", "m2"))
    doc = parse(render_heatmap(stats_rows(), "means", spec))
    cells = by_class(doc, "g", "cell")
    assert len(cells) == 4
    labels = texts(doc, "value")
    assert "−12" in labels and "3" in labels and "0" in labels and "–" in labels


def test_heatmap_stds():
    spec = FigureSpec("heatmap_stds", ("m1", "m2"))
    doc = parse(render_heatmap(stats_rows(), "stds", spec, classes=["stop", "nasal", "trill"]))
    assert len(by_class(doc, "g", "cell")) == 6


def test_heatmap_rejects_bad_input():
    spec = FigureSpec("heatmap_means", ("m1",))
    with pytest.raises(ShapeMismatch):
        render_heatmap(stats_rows(), "means", spec)
    spec = FigureSpec("heatmap_means", ("m1", "m2"))
    with pytest.raises(ShapeMismatch):
        render_heatmap(stats_rows() + stats_rows()[:1], "means", spec)
    with pytest.raises(ValueError):
        render_heatmap(stats_rows(), "medians", spec)


def ell(vowel, model, n=5, center=(1200.0, 700.0)):
    return VowelEllipse(vowel, model, center, (80.0, 40.0) if n >= 2 else (0.0, 0.0), n)


def test_vowel_chart_counts():
    gold = [ell("a", "gold"), ell("i", "gold", center=(2300.0, 300.0)), ell("u", "gold", center=(800.0, 350.0))]
    hyp = [ell(e.vowel, "m1", center=e.center) for e in gold]
    doc = parse(render_vowel_chart(hyp, gold))
    assert len(doc.getElementsByTagName("ellipse")) == 6
    assert len(by_class(doc, "text", "glyph")) == 6


def test_vowel_chart_single_token_glyph_only():
    doc = parse(render_vowel_chart([ell("a", "m1", n=1), ell("i", "m1", n=3, center=(2300.0, 300.0))]))
    assert len(doc.getElementsByTagName("ellipse")) == 1
    assert sorted(texts(doc, "glyph")) == ["a", "i"]


def test_vowel_chart_gold_is_black():
    doc = parse(render_vowel_chart([ell("a", "m1")], [ell("a", "gold")]))
    strokes = [e.getAttribute("stroke") for e in doc.getElementsByTagName("ellipse")]
    assert "#000000" in strokes and len(set(strokes)) == 2


def test_vowel_chart_axes_reversed():
    doc = parse(render_vowel_chart([ell("i", "m1", center=(2300.0, 300.0)), ell("u", "m1", center=(800.0, 350.0))]))
    xs = {t: float(e.getAttribute("x")) for t, e in zip(texts(doc, "glyph"), by_class(doc, "text", "glyph"))}
    # high F2 (i) sits left of low F2 (u)
    assert xs["i"] < xs["u"]


def test_vowel_chart_empty():
    doc = parse(render_vowel_chart([]))
    assert doc.getElementsByTagName("ellipse") == []
