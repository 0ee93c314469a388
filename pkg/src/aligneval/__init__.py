"""Evaluate forced-alignment output against hand-corrected Praat TextGrids.

Modules: ``textgrid`` (I/O), ``audio`` (WAV and signal conditioning),
``corpus`` (cleaning and bookkeeping), ``g2p`` (dictionaries), ``inventory``
(phone sets and natural classes), ``boundary`` (onset differences and their
statistics), ``vowels`` (formants and ellipses), ``report`` (SVG figures) and
``cli``.
"""

__version__ = "0.1.0"

from .boundary import (
    AlignmentPair,
    BoundaryDiff,
    DiffStats,
    HistogramResult,
    aggregate,
    flag_misalignments,
    histogram,
    match_tiers,
    onset_diffs,
)
from .inventory import NaturalClassMap, PhoneInventory, classify, coverage_report
from .textgrid import Interval, IntervalTier, TextGrid, parse_textgrid, serialize_textgrid
from .vowels import FormantConfig, VowelEllipse, VowelToken, build_ellipses, measure_vowel

__all__ = [
    "AlignmentPair", "BoundaryDiff", "DiffStats", "HistogramResult", "aggregate",
    "flag_misalignments", "histogram", "match_tiers", "onset_diffs", "NaturalClassMap",
    "PhoneInventory", "classify", "coverage_report", "Interval", "IntervalTier", "TextGrid",
    "parse_textgrid", "serialize_textgrid", "FormantConfig", "VowelEllipse", "VowelToken",
    "build_ellipses", "measure_vowel",
]
