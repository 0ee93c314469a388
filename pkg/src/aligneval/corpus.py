"""Transcript cleaning, short-word filtering and dataset bookkeeping."""

from __future__ import annotations

import csv
import json
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from decimal import Decimal
from pathlib import Path
from typing import Iterable

from .errors import AlignEvalError, InvalidPattern
from .textgrid import IntervalTier, decimal_seconds, read_textgrid

MANIFEST_COLUMNS = ("path_audio", "path_textgrid", "language", "split")


@dataclass(frozen=True)
class CleaningRules:
    """Ordered regex substitutions plus partial-word markers.

    A token counts as a partial word when it starts or ends with one of
    ``partial_word_markers`` (``warrgal-`` or ``-galym``).  Each strip pattern
    is re-applied until it no longer matches, so nested comments such as
    ``((laughs) softly)`` go in one call.
    """

    strip_patterns: tuple[tuple[str, str], ...] = ()
    partial_word_markers: frozenset[str] = frozenset({"-"})
    min_word_duration: float = 0.1
    _compiled: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.min_word_duration < 0:
            raise ValueError("min_word_duration must be >= 0")
        object.__setattr__(self, "strip_patterns", tuple(tuple(p) for p in self.strip_patterns))
        object.__setattr__(self, "partial_word_markers", frozenset(self.partial_word_markers))
        compiled = []
        for pattern, repl in self.strip_patterns:
            try:
                rx = re.compile(pattern)
                rx.sub(repl, "")  # bad group references surface here
            except (re.error, IndexError) as e:
                raise InvalidPattern(f"{pattern!r} -> {repl!r}: {e}") from None
            compiled.append((rx, repl))
        object.__setattr__(self, "_compiled", tuple(compiled))

    @classmethod
    def default(cls) -> "CleaningRules":
        return cls(strip_patterns=DEFAULT_STRIP_PATTERNS)

    @classmethod
    def from_json(cls, doc: dict) -> "CleaningRules":
        pats = []
        for item in doc.get("strip_patterns", []):
            if isinstance(item, dict):
                pats.append((item["pattern"], item.get("replacement", " ")))
            else:
                pats.append(tuple(item))
        return cls(
            strip_patterns=tuple(pats),
            partial_word_markers=frozenset(doc.get("partial_word_markers", ["-"])),
            min_word_duration=float(doc.get("min_word_duration", 0.1)),
        )

    @classmethod
    def load(cls, path: str | Path) -> "CleaningRules":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_json(self) -> dict:
        return {
            "strip_patterns": [{"pattern": p, "replacement": r} for p, r in self.strip_patterns],
            "partial_word_markers": sorted(self.partial_word_markers),
            "min_word_duration": self.min_word_duration,
        }


# Comments in parentheses, brackets or braces; word-internal hyphens joined.
DEFAULT_STRIP_PATTERNS = (
    (r"\([^()]*\)", " "),
    (r"\[[^\[\]]*\]", " "),
    (r"\{[^{}]*\}", " "),
    (r"(?<=\w)-(?=\w)", ""),
)


def _is_partial(token: str, markers: Iterable[str]) -> bool:
    return any(m and (token.startswith(m) or token.endswith(m)) for m in markers)


def clean_transcript(text: str, rules: CleaningRules) -> str:
    for rx, repl in rules._compiled:
        while True:
            text, n = rx.subn(repl, text)
            if n == 0:
                break
    tokens = [t for t in text.split() if not _is_partial(t, rules.partial_word_markers)]
    return " ".join(tokens)


def clean_tier(tier: IntervalTier, rules: CleaningRules) -> IntervalTier:
    ivs = tuple(replace(iv, text=clean_transcript(iv.text, rules)) for iv in tier.intervals)
    return replace(tier, intervals=ivs)


def filter_short_words(tier: IntervalTier, min_duration: float = 0.1) -> IntervalTier:
    """Blank the label of every word strictly shorter than ``min_duration``.

    Durations are compared on the decimal values written in the file, so a
    word spanning 0.2 to 0.3 s is exactly 0.1 s long and is kept.
    """
    limit = decimal_seconds(min_duration)
    out = []
    for iv in tier.intervals:
        if iv.text and decimal_seconds(iv.xmax) - decimal_seconds(iv.xmin) < limit:
            iv = replace(iv, text="")
        out.append(iv)
    return replace(tier, intervals=tuple(out))


# manifests and dataset bookkeeping


@dataclass(frozen=True)
class ManifestEntry:
    path_audio: Path
    path_textgrid: Path
    language: str
    split: str = ""

    @property
    def stem(self) -> str:
        return self.path_textgrid.stem


def read_manifest(path: str | Path) -> list[ManifestEntry]:
    """Read the UTF-8 CSV manifest; relative paths resolve against its folder."""
    path = Path(path)
    base = path.parent
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = [c for c in MANIFEST_COLUMNS[:3] if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: manifest lacks columns {missing}")
        rows = []
        for row in reader:
            rows.append(
                ManifestEntry(
                    path_audio=base / row["path_audio"].strip(),
                    path_textgrid=base / row["path_textgrid"].strip(),
                    language=row["language"].strip(),
                    split=(row.get("split") or "").strip(),
                )
            )
    return rows


def write_manifest(path: str | Path, entries: Iterable[ManifestEntry]) -> None:
    path = Path(path)
    base = path.parent.resolve()
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(MANIFEST_COLUMNS)
        for e in entries:
            w.writerow([_rel(e.path_audio, base), _rel(e.path_textgrid, base), e.language, e.split])


def _rel(p: Path, base: Path) -> str:
    return os.path.relpath(Path(p).resolve(), base)


@dataclass
class DatasetSummary:
    """Audio minutes per language and per (language, split)."""

    seconds_by_language: dict[str, Decimal] = field(default_factory=dict)
    seconds_by_split: dict[tuple[str, str], Decimal] = field(default_factory=dict)
    files: int = 0
    errors: list[dict] = field(default_factory=list)

    @property
    def total_minutes(self) -> float:
        return float(sum(self.seconds_by_language.values(), Decimal(0)) / 60)

    @property
    def minutes_by_language(self) -> dict[str, float]:
        return {k: float(v / 60) for k, v in self.seconds_by_language.items()}

    def minutes(self, languages: Iterable[str] | None = None, splits: Iterable[str] | None = None) -> float:
        """Minutes restricted to the given languages and/or splits."""
        langs = None if languages is None else set(languages)
        spl = None if splits is None else set(splits)
        total = Decimal(0)
        for (lang, split), secs in self.seconds_by_split.items():
            if (langs is None or lang in langs) and (spl is None or split in spl):
                total += secs
        return float(total / 60)

    def to_json(self) -> dict:
        return {
            "files": self.files,
            "total_minutes": self.total_minutes,
            "minutes_by_language": dict(sorted(self.minutes_by_language.items())),
            "minutes_by_split": [
                {"language": lang, "split": split, "minutes": float(secs / 60)}
                for (lang, split), secs in sorted(self.seconds_by_split.items())
            ],
            "errors": self.errors,
        }


def assemble_dataset(manifest: Iterable[ManifestEntry], check_textgrids: bool = True) -> DatasetSummary:
    """Sum audio durations (header only) per language; bad files are reported, not fatal."""
    from .audio import wav_info

    by_lang: dict[str, Decimal] = defaultdict(Decimal)
    by_split: dict[tuple[str, str], Decimal] = defaultdict(Decimal)
    summary = DatasetSummary()
    for entry in manifest:
        try:
            info = wav_info(entry.path_audio)
            if check_textgrids:
                read_textgrid(entry.path_textgrid)
        except (OSError, AlignEvalError) as e:
            summary.errors.append(
                {
                    "audio": str(entry.path_audio),
                    "textgrid": str(entry.path_textgrid),
                    "error": type(e).__name__,
                    "message": str(e),
                }
            )
            continue
        secs = Decimal(info.n_frames) / Decimal(info.sample_rate)
        by_lang[entry.language] += secs
        by_split[(entry.language, entry.split)] += secs
        summary.files += 1
    summary.seconds_by_language = dict(by_lang)
    summary.seconds_by_split = dict(by_split)
    return summary
