"""Onset-boundary comparison of hypothesis phone tiers against gold tiers.

A diff is ``(hypothesis onset - gold onset)`` in milliseconds, so a positive
value means the aligner put the boundary later than the annotator did.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyTier, UnknownPhone, UnsupportedTier
from .inventory import NaturalClassMap, classify
from .textgrid import Interval, IntervalTier, decimal_seconds, format_time

#: labels treated as silence / non-phones on either side
DEFAULT_SILENCE = frozenset({"", "sil", "sp", "spn", "<eps>"})

HISTOGRAM_LIMIT_MS = 205.0
HISTOGRAM_EDGES = tuple(float(e) for e in range(-205, 206, 10))


def normalize_label(text: str) -> str:
    return unicodedata.normalize("NFC", text.strip())


@dataclass(frozen=True)
class AlignmentPair:
    phone: str
    gold: Interval
    hyp: Interval
    word: str = ""
    file: str = ""
    position: int = 0
    # phones in the containing gold word; 0 when no word tier was given
    word_length: int = 0

    @property
    def word_internal(self) -> bool:
        return 0 < self.position < self.word_length - 1


@dataclass(frozen=True)
class MatchDiagnostic:
    kind: str  # "deletion" | "insertion" | "substitution"
    file: str
    gold: Interval | None
    hyp: Interval | None

    def to_json(self) -> dict:
        def iv(x):
            return None if x is None else {"xmin": x.xmin, "xmax": x.xmax, "text": x.text}

        return {"kind": self.kind, "file": self.file, "gold": iv(self.gold), "hyp": iv(self.hyp)}


@dataclass(frozen=True)
class BoundaryDiff:
    pair: AlignmentPair
    diff_ms: float


def onset_diff_ms(gold_onset: float, hyp_onset: float) -> float:
    """Exact decimal difference of the two written times, in ms."""
    return float((decimal_seconds(hyp_onset) - decimal_seconds(gold_onset)) * 1000)


def _phones(tier: IntervalTier, silence) -> list[Interval]:
    if not isinstance(tier, IntervalTier):
        raise UnsupportedTier(f"tier {getattr(tier, 'name', '?')!r} is not an interval tier")
    return [iv for iv in tier.intervals if normalize_label(iv.text) not in silence]


def _edit_table(a: Sequence[str], b: Sequence[str]) -> np.ndarray:
    """Levenshtein distance table with unit costs, one numpy pass per row."""
    n, m = len(a), len(b)
    table = np.empty((n + 1, m + 1), dtype=np.int32)
    cols = np.arange(m + 1, dtype=np.int32)
    table[0] = cols
    # intern labels so row comparisons are integer ops
    ids = {}
    bi = np.array([ids.setdefault(x, len(ids)) for x in b], dtype=np.int64)
    for i in range(1, n + 1):
        ai = ids.setdefault(a[i - 1], len(ids))
        prev = table[i - 1]
        cur = np.empty(m + 1, dtype=np.int32)
        cur[0] = i
        cur[1:] = np.minimum(prev[:-1] + (bi != ai), prev[1:] + 1)
        # insertions: cur[j] = min_k<=j cur[k] + (j - k)
        table[i] = np.minimum.accumulate(cur - cols) + cols
    return table


def match_tiers(
    gold: IntervalTier,
    hyp: IntervalTier,
    gold_words: IntervalTier | None = None,
    file: str = "",
    silence: frozenset[str] = DEFAULT_SILENCE,
) -> tuple[list[AlignmentPair], list[MatchDiagnostic]]:
    """Pair gold and hypothesis phones by label.

    Identical label sequences pair positionally.  Otherwise a minimum edit
    alignment is taken and only its exact matches become pairs;
    insertions, deletions and substitutions are returned as diagnostics.
    Backtracking prefers a match, then a deletion, then an insertion.
    """
    g = _phones(gold, silence)
    h = _phones(hyp, silence)
    if not g:
        raise EmptyTier(f"{file or 'gold'}: tier {gold.name!r} has no labeled phones")
    gl = [normalize_label(iv.text) for iv in g]
    hl = [normalize_label(iv.text) for iv in h]

    matched: list[tuple[int, int]] = []
    diags: list[MatchDiagnostic] = []
    if gl == hl:
        matched = [(i, i) for i in range(len(g))]
    else:
        table = _edit_table(gl, hl)
        i, j = len(gl), len(hl)
        while i > 0 or j > 0:
            d = table[i, j]
            if i > 0 and j > 0 and gl[i - 1] == hl[j - 1] and table[i - 1, j - 1] == d:
                matched.append((i - 1, j - 1))
                i, j = i - 1, j - 1
            elif i > 0 and table[i - 1, j] + 1 == d:
                diags.append(MatchDiagnostic("deletion", file, g[i - 1], None))
                i -= 1
            elif j > 0 and table[i, j - 1] + 1 == d:
                diags.append(MatchDiagnostic("insertion", file, None, h[j - 1]))
                j -= 1
            else:
                diags.append(MatchDiagnostic("substitution", file, g[i - 1], h[j - 1]))
                i, j = i - 1, j - 1
        matched.reverse()
        diags.reverse()

    context = _word_context(g, gold_words, silence)
    pairs = []
    for gi, hi in matched:
        word, pos, size = context[gi]
        pairs.append(AlignmentPair(gl[gi], g[gi], h[hi], word, file, pos, size))
    return pairs, diags


def _word_context(phones: list[Interval], words: IntervalTier | None, silence):
    """(word label, index within word, phones in word) for each gold phone."""
    if words is None:
        return [("", 0, 0)] * len(phones)
    starts = [iv.xmin for iv in words.intervals]
    owner = []
    for ph in phones:
        k = bisect.bisect_right(starts, ph.midpoint) - 1
        w = words.intervals[k] if k >= 0 else None
        owner.append(k if w is not None and normalize_label(w.text) not in silence else None)
    counts: dict[int, int] = {}
    for k in owner:
        if k is not None:
            counts[k] = counts.get(k, 0) + 1
    seen: dict[int, int] = {}
    out = []
    for k in owner:
        if k is None:
            out.append(("", 0, 0))
            continue
        pos = seen.get(k, 0)
        seen[k] = pos + 1
        out.append((normalize_label(words.intervals[k].text), pos, counts[k]))
    return out


def onset_diffs(pairs: Iterable[AlignmentPair]) -> list[BoundaryDiff]:
    return [BoundaryDiff(p, onset_diff_ms(p.gold.xmin, p.hyp.xmin)) for p in pairs]


# statistics


@dataclass
class RunningStats:
    """Mergeable count / mean / M2 / sum|x| accumulator (Welford, Chan merge)."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0
    abs_sum: float = 0.0

    def add(self, x: float) -> None:
        self.n += 1
        delta = x - self.mean
        self.mean += delta / self.n
        self.m2 += delta * (x - self.mean)
        self.abs_sum += abs(x)

    def merge(self, other: "RunningStats") -> "RunningStats":
        if other.n == 0:
            return RunningStats(self.n, self.mean, self.m2, self.abs_sum)
        if self.n == 0:
            return RunningStats(other.n, other.mean, other.m2, other.abs_sum)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return RunningStats(n, mean, m2, self.abs_sum + other.abs_sum)

    @property
    def std(self) -> float:
        """Population standard deviation."""
        return math.sqrt(max(self.m2, 0.0) / self.n) if self.n else 0.0

    @property
    def mean_abs(self) -> float:
        return self.abs_sum / self.n if self.n else 0.0


@dataclass(frozen=True)
class DiffStats:
    model: str
    setting: str
    group: str
    n: int
    mean_ms: float
    std_ms: float
    mean_abs_ms: float

    def to_json(self) -> dict:
        return {
            "model": self.model,
            "setting": self.setting,
            "class": self.group,
            "n": self.n,
            "mean_ms": self.mean_ms,
            "std_ms": self.std_ms,
            "mean_abs_ms": self.mean_abs_ms,
        }


GROUPINGS = ("class", "phone", "all")


def aggregate(
    diffs: Iterable[BoundaryDiff],
    class_map: NaturalClassMap,
    by: str = "class",
    model: str = "",
    setting: str = "",
    in_range_only: bool = False,
) -> list[DiffStats]:
    """Per-group count, mean, population std and mean |diff|.

    ``by`` is ``"class"`` (natural class), ``"phone"`` or ``"all"``.  With
    ``in_range_only`` tokens outside [-205, 205] ms are left out, matching
    what the histograms show.  Rows follow class-map order.
    """
    if by not in GROUPINGS:
        raise ValueError(f"by must be one of {GROUPINGS}")
    acc: dict[str, RunningStats] = {}
    for d in diffs:
        try:
            cls = classify(d.pair.phone, class_map)
        except UnknownPhone as e:
            raise UnknownPhone(d.pair.phone, f"file {d.pair.file!r}" if d.pair.file else "") from e
        if in_range_only and abs(d.diff_ms) > HISTOGRAM_LIMIT_MS:
            continue
        key = cls if by == "class" else d.pair.phone if by == "phone" else "all"
        acc.setdefault(key, RunningStats()).add(d.diff_ms)

    labels = class_map.labels

    def order(key: str):
        if by == "class":
            return (labels.index(key), key)
        if by == "phone":
            c = class_map.classify(key)
            return (labels.index(c), key)
        return (0, key)

    return [
        DiffStats(model, setting, k, s.n, s.mean, s.std, s.mean_abs)
        for k, s in sorted(acc.items(), key=lambda kv: order(kv[0]))
        if s.n > 0
    ]


@dataclass(frozen=True)
class HistogramResult:
    bin_edges: tuple[float, ...]
    counts: tuple[int, ...]
    excluded_pct: float
    in_range_count: int
    total: int

    @property
    def excluded_count(self) -> int:
        return self.total - self.in_range_count

    def to_json(self) -> dict:
        return {
            "bin_edges": list(self.bin_edges),
            "counts": list(self.counts),
            "excluded_pct": self.excluded_pct,
            "in_range_count": self.in_range_count,
            "total": self.total,
        }


def _values(diffs) -> np.ndarray:
    return np.array([d.diff_ms if isinstance(d, BoundaryDiff) else float(d) for d in diffs], dtype=float)


def histogram(diffs: Iterable[BoundaryDiff | float]) -> HistogramResult:
    """10 ms bins from -205 to 205 ms, centered on a [-5, 5) bin.

    Bins are half-open ``[lo, hi)`` except the last, ``[195, 205]``.
    Tokens outside [-205, 205] are counted as excluded.
    """
    v = _values(diffs)
    edges = np.array(HISTOGRAM_EDGES)
    inside = (v >= edges[0]) & (v <= edges[-1])
    idx = np.searchsorted(edges, v[inside], side="right") - 1
    idx[idx == len(edges) - 1] = len(edges) - 2
    counts = np.bincount(idx, minlength=len(edges) - 1)
    total = len(v)
    n_in = int(inside.sum())
    pct = 100.0 * (total - n_in) / total if total else 0.0
    return HistogramResult(HISTOGRAM_EDGES, tuple(int(c) for c in counts), pct, n_in, total)


def flag_misalignments(
    pairs: Iterable[AlignmentPair | BoundaryDiff],
    threshold_ms: float = 100.0,
    limit: int = 100,
) -> list[BoundaryDiff]:
    """The first ``limit`` pairs, in the given order, with |diff| > threshold."""
    if threshold_ms <= 0:
        raise ValueError("threshold_ms must be positive")
    out = []
    for p in pairs:
        d = p if isinstance(p, BoundaryDiff) else BoundaryDiff(p, onset_diff_ms(p.gold.xmin, p.hyp.xmin))
        if abs(d.diff_ms) > threshold_ms:
            out.append(d)
            if len(out) >= limit:
                break
    return out


# export

DIFF_COLUMNS = ("file", "word", "phone", "class", "position", "gold_onset_s", "hyp_onset_s", "diff_ms")
STATS_COLUMNS = ("model", "setting", "class", "n", "mean_ms", "std_ms", "mean_abs_ms")
FLAG_COLUMNS = (
    "model", "setting", "file", "word", "phone", "position", "word_length",
    "word_internal", "gold_onset_s", "hyp_onset_s", "diff_ms",
)


def _num(x: float) -> str:
    return repr(float(x))


def diffs_csv(diffs: Iterable[BoundaryDiff], class_map: NaturalClassMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(DIFF_COLUMNS)
    for d in diffs:
        p = d.pair
        w.writerow([
            p.file, p.word, p.phone, class_map.classify(p.phone), p.position,
            format_time(p.gold.xmin), format_time(p.hyp.xmin), _num(d.diff_ms),
        ])
    return buf.getvalue()


def stats_csv(stats: Iterable[DiffStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(STATS_COLUMNS)
    for s in stats:
        w.writerow([s.model, s.setting, s.group, s.n, _num(s.mean_ms), _num(s.std_ms), _num(s.mean_abs_ms)])
    return buf.getvalue()


def stats_json(stats: Iterable[DiffStats]) -> str:
    return json.dumps([s.to_json() for s in stats], indent=1, ensure_ascii=False) + "\n"


def flags_csv(rows: Iterable[tuple[str, str, BoundaryDiff]]) -> str:
    """``rows`` holds (model, setting, diff) triples."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FLAG_COLUMNS)
    for model, setting, d in rows:
        p = d.pair
        w.writerow([
            model, setting, p.file, p.word, p.phone, p.position, p.word_length,
            int(p.word_internal), format_time(p.gold.xmin), format_time(p.hyp.xmin), _num(d.diff_ms),
        ])
    return buf.getvalue()
