"""Praat TextGrid reading and writing.

Both the long ("verbose") and short text formats are read by reducing the
file to a stream of value tokens: quoted strings, numbers and the
``<exists>`` flag.  Keys such as ``xmin =`` or ``intervals [3]:`` carry no
information beyond position, so the two formats become the same stream.
Only the long format is written.
"""

from __future__ import annotations

import codecs
import re
import warnings
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Sequence, Union

from .errors import (
    EncodingError,
    InvalidInterval,
    MalformedHeader,
    MalformedTextGrid,
    NonContiguousTier,
)

#: boundaries closer than this are treated as shared and snapped together
CONTIGUITY_TOLERANCE = 1e-9


class AmbiguousTierWarning(UserWarning):
    """More than one tier carries the requested name."""


def decimal_seconds(t: float) -> Decimal:
    """The shortest decimal that reads back as ``t``.

    Times come from decimal text, so differences taken on these values are
    exact with respect to what was written in the file (``1.012 - 1.0`` is
    ``0.012``, not ``0.011999999999999567``).
    """
    return Decimal(repr(float(t)))


def format_time(t: float) -> str:
    """Shortest round-tripping positional decimal, trailing zeros trimmed."""
    t = float(t)
    if t == 0:
        return "0"
    s = format(decimal_seconds(t), "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    return s


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    text: str = ""

    def __post_init__(self):
        if not (self.xmin < self.xmax):
            raise InvalidInterval(
                f"interval [{self.xmin}, {self.xmax}] has non-positive duration"
            )

    @property
    def duration(self) -> float:
        return self.xmax - self.xmin

    @property
    def midpoint(self) -> float:
        return (self.xmin + self.xmax) / 2


@dataclass(frozen=True)
class Point:
    time: float
    mark: str = ""


@dataclass(frozen=True)
class IntervalTier:
    """Contiguous run of intervals covering ``[xmin, xmax]`` exactly."""

    name: str
    xmin: float
    xmax: float
    intervals: tuple[Interval, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))
        ivs = self.intervals
        if not ivs:
            raise MalformedTextGrid(f"interval tier {self.name!r} has no intervals")
        if ivs[0].xmin != self.xmin:
            raise NonContiguousTier(self.name, 1, ivs[0].xmin - self.xmin)
        for i in range(1, len(ivs)):
            if ivs[i].xmin != ivs[i - 1].xmax:
                raise NonContiguousTier(self.name, i + 1, ivs[i].xmin - ivs[i - 1].xmax)
        if ivs[-1].xmax != self.xmax:
            raise NonContiguousTier(self.name, len(ivs), self.xmax - ivs[-1].xmax)

    @classmethod
    def from_bounds(
        cls,
        name: str,
        bounds: Iterable[tuple[float, float, str]],
        xmin: float | None = None,
        xmax: float | None = None,
        tolerance: float = CONTIGUITY_TOLERANCE,
    ) -> "IntervalTier":
        """Build a tier from raw ``(xmin, xmax, text)`` triples.

        Boundaries within ``tolerance`` of each other are snapped to a shared
        value (the left interval's xmax wins); larger gaps or overlaps raise
        :class:`NonContiguousTier`.
        """
        raw = list(bounds)
        if not raw:
            raise MalformedTextGrid(f"interval tier {name!r} has no intervals")
        tier_xmin = raw[0][0] if xmin is None else xmin
        tier_xmax = raw[-1][1] if xmax is None else xmax
        out = []
        left = tier_xmin
        for i, (a, b, text) in enumerate(raw):
            if abs(a - left) > tolerance:
                raise NonContiguousTier(name, i + 1, a - left)
            if i == len(raw) - 1:
                if abs(b - tier_xmax) > tolerance:
                    raise NonContiguousTier(name, i + 1, tier_xmax - b)
                b = tier_xmax
            out.append(Interval(left, b, text))
            left = b
        return cls(name, tier_xmin, tier_xmax, tuple(out))

    def __len__(self):
        return len(self.intervals)

    def __iter__(self):
        return iter(self.intervals)

    def labeled(self) -> list[Interval]:
        return [iv for iv in self.intervals if iv.text.strip()]

    def shifted(self, dt: float) -> "IntervalTier":
        return IntervalTier(
            self.name,
            self.xmin + dt,
            self.xmax + dt,
            tuple(Interval(iv.xmin + dt, iv.xmax + dt, iv.text) for iv in self.intervals),
        )


@dataclass(frozen=True)
class PointTier:
    """A Praat TextTier.  Kept so files round-trip; evaluation rejects it."""

    name: str
    xmin: float
    xmax: float
    points: tuple[Point, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(self.points))


Tier = Union[IntervalTier, PointTier]


@dataclass(frozen=True)
class TextGrid:
    xmin: float
    xmax: float
    tiers: tuple[Tier, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))
        if not (self.xmin <= self.xmax):
            raise MalformedTextGrid(f"TextGrid xmin {self.xmin} > xmax {self.xmax}")
        for tier in self.tiers:
            if (
                tier.xmin < self.xmin - CONTIGUITY_TOLERANCE
                or tier.xmax > self.xmax + CONTIGUITY_TOLERANCE
            ):
                raise MalformedTextGrid(
                    f"tier {tier.name!r} [{tier.xmin}, {tier.xmax}] lies outside "
                    f"the TextGrid [{self.xmin}, {self.xmax}]"
                )

    @property
    def tier_names(self) -> list[str]:
        return [t.name for t in self.tiers]

    def get_tier(self, name: str) -> Tier | None:
        return get_tier(self, name)

    def replace_tier(self, name: str, tier: Tier) -> "TextGrid":
        """Copy of the grid with the first tier named ``name`` swapped out."""
        tiers = list(self.tiers)
        for i, t in enumerate(tiers):
            if t.name == name:
                tiers[i] = tier
                return TextGrid(self.xmin, self.xmax, tuple(tiers))
        raise KeyError(name)


def get_tier(grid: TextGrid, name: str) -> Tier | None:
    """First tier called ``name``; warns when the name is not unique."""
    matches = [t for t in grid.tiers if t.name == name]
    if not matches:
        return None
    if len(matches) > 1:
        warnings.warn(
            f"{len(matches)} tiers named {name!r}; using the first",
            AmbiguousTierWarning,
            stacklevel=2,
        )
    return matches[0]


# reading

_TOKEN = re.compile(
    r"""
      "(?P<str>(?:[^"]|"")*)"
    | (?P<flag><exists>|<absent>)
    | (?P<comment>![^\n]*)
    | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(?=\s|$)
    | (?P<word>[^\s"]+)
    | (?P<bad>")
    """,
    re.VERBOSE,
)


def _decode(data: bytes) -> str:
    if data.startswith(codecs.BOM_UTF8):
        try:
            return data[len(codecs.BOM_UTF8):].decode("utf-8")
        except UnicodeDecodeError as e:
            raise EncodingError(f"bad UTF-8 after BOM: {e}") from None
    if data.startswith((codecs.BOM_UTF16_LE, codecs.BOM_UTF16_BE)):
        try:
            return data.decode("utf-16")
        except UnicodeDecodeError as e:
            raise EncodingError(f"bad UTF-16: {e}") from None
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        pass
    # BOM-less UTF-16: ASCII-range text leaves every other byte null
    if len(data) >= 2 and len(data) % 2 == 0:
        codec = None
        if data[1] == 0 and data[0] != 0:
            codec = "utf-16-le"
        elif data[0] == 0 and data[1] != 0:
            codec = "utf-16-be"
        if codec:
            try:
                return data.decode(codec)
            except UnicodeDecodeError:
                pass
    return data.decode("latin-1")


class _Stream:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, object]] = []
        for m in _TOKEN.finditer(text):
            kind = m.lastgroup
            if kind == "str":
                self.tokens.append(("str", m.group("str").replace('""', '"')))
            elif kind == "num":
                self.tokens.append(("num", m.group("num")))
            elif kind == "flag":
                self.tokens.append(("flag", m.group("flag")))
            elif kind == "bad":
                raise MalformedTextGrid(f"unterminated string at offset {m.start()}")
        self.pos = 0

    def _next(self, what: str):
        if self.pos >= len(self.tokens):
            raise MalformedTextGrid(f"file ended while reading {what}")
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def string(self, what: str) -> str:
        kind, value = self._next(what)
        if kind != "str":
            raise MalformedTextGrid(f"expected a quoted string for {what}, got {value!r}")
        return value

    def number(self, what: str) -> float:
        kind, value = self._next(what)
        if kind != "num":
            raise MalformedTextGrid(f"expected a number for {what}, got {value!r}")
        x = float(value)
        if x != x or x in (float("inf"), float("-inf")):
            raise MalformedTextGrid(f"non-finite {what}: {value}")
        return x

    def count(self, what: str) -> int:
        x = self.number(what)
        if x < 0 or not x.is_integer():
            raise MalformedTextGrid(f"{what} must be a non-negative integer, got {x}")
        return int(x)

    def peek_flag(self) -> str | None:
        if self.pos < len(self.tokens) and self.tokens[self.pos][0] == "flag":
            self.pos += 1
            return self.tokens[self.pos - 1][1]
        return None

    def at_end(self) -> bool:
        return self.pos >= len(self.tokens)


def parse_textgrid(source: bytes | str) -> TextGrid:
    """Parse a long- or short-format text TextGrid.

    ``source`` may be raw bytes (UTF-8, UTF-16 with or without BOM, or
    Latin-1) or an already decoded string.
    """
    text = _decode(source) if isinstance(source, (bytes, bytearray)) else source
    if text.startswith("\ufeff"):
        text = text[1:]
    stream = _Stream(text)
    if stream.at_end() or stream.tokens[0][0] != "str" or not str(
        stream.tokens[0][1]
    ).startswith("ooTextFile"):
        raise MalformedHeader('missing "ooTextFile" preamble')
    stream.pos = 1
    if stream.at_end() or stream.tokens[1] != ("str", "TextGrid"):
        raise MalformedHeader('object class is not "TextGrid"')
    stream.pos = 2

    xmin = stream.number("TextGrid xmin")
    xmax = stream.number("TextGrid xmax")
    flag = stream.peek_flag()
    n_tiers = 0 if flag == "<absent>" else stream.count("tier count")

    tiers: list[Tier] = []
    for _ in range(n_tiers):
        cls = stream.string("tier class")
        name = stream.string("tier name")
        t0 = stream.number(f"xmin of tier {name!r}")
        t1 = stream.number(f"xmax of tier {name!r}")
        n = stream.count(f"size of tier {name!r}")
        if cls == "IntervalTier":
            raw = []
            for i in range(n):
                a = stream.number(f"xmin of interval {i + 1} in {name!r}")
                b = stream.number(f"xmax of interval {i + 1} in {name!r}")
                label = stream.string(f"text of interval {i + 1} in {name!r}")
                raw.append((a, b, label))
            tiers.append(IntervalTier.from_bounds(name, raw, t0, t1))
        elif cls == "TextTier":
            points = []
            for i in range(n):
                t = stream.number(f"time of point {i + 1} in {name!r}")
                mark = stream.string(f"mark of point {i + 1} in {name!r}")
                points.append(Point(t, mark))
            tiers.append(PointTier(name, t0, t1, tuple(points)))
        else:
            raise MalformedTextGrid(f"unknown tier class {cls!r}")
    if not stream.at_end():
        raise MalformedTextGrid("unexpected content after the last tier")
    return TextGrid(xmin, xmax, tuple(tiers))


def read_textgrid(path: str | Path) -> TextGrid:
    return parse_textgrid(Path(path).read_bytes())


# writing


def _quote(s: str) -> str:
    return '"' + s.replace('"', '""') + '"'


def serialize_textgrid(grid: TextGrid) -> bytes:
    """Long text format, UTF-8, Praat's own layout."""
    f = format_time
    lines = [
        'File type = "ooTextFile"',
        'Object class = "TextGrid"',
        "",
        f"xmin = {f(grid.xmin)} ",
        f"xmax = {f(grid.xmax)} ",
    ]
    if not grid.tiers:
        lines.append("tiers? <absent> ")
    else:
        lines += ["tiers? <exists> ", f"size = {len(grid.tiers)} ", "item []: "]
    for k, tier in enumerate(grid.tiers, start=1):
        cls = "IntervalTier" if isinstance(tier, IntervalTier) else "TextTier"
        lines += [
            f"    item [{k}]:",
            f"        class = {_quote(cls)} ",
            f"        name = {_quote(tier.name)} ",
            f"        xmin = {f(tier.xmin)} ",
            f"        xmax = {f(tier.xmax)} ",
        ]
        if isinstance(tier, IntervalTier):
            lines.append(f"        intervals: size = {len(tier.intervals)} ")
            for i, iv in enumerate(tier.intervals, start=1):
                lines += [
                    f"        intervals [{i}]:",
                    f"            xmin = {f(iv.xmin)} ",
                    f"            xmax = {f(iv.xmax)} ",
                    f"            text = {_quote(iv.text)} ",
                ]
        else:
            lines.append(f"        points: size = {len(tier.points)} ")
            for i, p in enumerate(tier.points, start=1):
                lines += [
                    f"        points [{i}]:",
                    f"            number = {f(p.time)} ",
                    f"            mark = {_quote(p.mark)} ",
                ]
    return ("\n".join(lines) + "\n").encode("utf-8")


def serialize_short(grid: TextGrid) -> bytes:
    """Short text format.  Only used to build fixtures; Praat reads it too."""
    f = format_time
    lines = ['File type = "ooTextFile"', 'Object class = "TextGrid"', "", f(grid.xmin), f(grid.xmax)]
    lines += ["<exists>", str(len(grid.tiers))]
    for tier in grid.tiers:
        if isinstance(tier, IntervalTier):
            lines += ['"IntervalTier"', _quote(tier.name), f(tier.xmin), f(tier.xmax), str(len(tier))]
            for iv in tier.intervals:
                lines += [f(iv.xmin), f(iv.xmax), _quote(iv.text)]
        else:
            lines += ['"TextTier"', _quote(tier.name), f(tier.xmin), f(tier.xmax), str(len(tier.points))]
            for p in tier.points:
                lines += [f(p.time), _quote(p.mark)]
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_textgrid(path: str | Path, grid: TextGrid) -> None:
    Path(path).write_bytes(serialize_textgrid(grid))


def make_textgrid(tiers: Sequence[Tier]) -> TextGrid:
    """Wrap tiers in a TextGrid spanning their union."""
    if not tiers:
        return TextGrid(0.0, 0.0, ())
    return TextGrid(min(t.xmin for t in tiers), max(t.xmax for t in tiers), tuple(tiers))
