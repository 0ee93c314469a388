"""Rule-based grapheme-to-phoneme conversion and MFA dictionary output."""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import InvalidRuleSet
from .inventory import PhoneInventory
from .textgrid import IntervalTier


@dataclass(frozen=True)
class UnmappedGrapheme:
    word: str
    position: int
    char: str

    def __str__(self):
        return f"{self.word!r}[{self.position}]: no rule for {self.char!r}"


@dataclass(frozen=True)
class G2PRuleSet:
    """Ordered grapheme to phone-sequence rules for one language.

    ``ordered`` holds the rules longest grapheme first; equal lengths keep
    their declared order.
    """

    rules: tuple[tuple[str, tuple[str, ...]], ...]
    language: str = ""
    ordered: tuple[tuple[str, tuple[str, ...]], ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        rules = tuple((g, tuple(p)) for g, p in self.rules)
        seen = set()
        for g, _ in rules:
            if not g:
                raise InvalidRuleSet("empty grapheme")
            if g in seen:
                raise InvalidRuleSet(f"duplicate grapheme {g!r}")
            seen.add(g)
        object.__setattr__(self, "rules", rules)
        # sorted() is stable, so declared order breaks length ties
        object.__setattr__(self, "ordered", tuple(sorted(rules, key=lambda r: -len(r[0]))))

    @classmethod
    def from_json(cls, doc: Sequence[Mapping], language: str = "") -> "G2PRuleSet":
        rules = []
        for item in doc:
            phones = item["phones"]
            if isinstance(phones, str):
                phones = phones.split()
            rules.append((unicodedata.normalize("NFC", item["grapheme"]), tuple(phones)))
        return cls(tuple(rules), language)

    @classmethod
    def load(cls, path: str | Path, language: str = "") -> "G2PRuleSet":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), language)


def shipped_rules(language: str) -> G2PRuleSet:
    """Example tables bundled for the six corpus languages (unofficial)."""
    name = language.lower().replace("-", "_") + ".json"
    res = resources.files("aligneval.data").joinpath("g2p", name)
    if not res.is_file():
        raise KeyError(f"no shipped g2p table for {language!r}")
    return G2PRuleSet.from_json(json.loads(res.read_text("utf-8")), language)


def apply_g2p(word: str, rules: G2PRuleSet) -> tuple[list[str], list[UnmappedGrapheme]]:
    """Greedy longest-match conversion, left to right.

    Characters no rule covers are skipped and reported.
    """
    word = unicodedata.normalize("NFC", word)
    phones: list[str] = []
    unmapped: list[UnmappedGrapheme] = []
    i = 0
    while i < len(word):
        for grapheme, out in rules.ordered:
            if word.startswith(grapheme, i):
                phones.extend(out)
                i += len(grapheme)
                break
        else:
            unmapped.append(UnmappedGrapheme(word, i, word[i]))
            i += 1
    return phones, unmapped


def build_wordlist(tiers: Iterable[IntervalTier], casefold: bool = True) -> list[str]:
    """Sorted unique words over all labels; multi-word labels are split on spaces."""
    words = set()
    for tier in tiers:
        for iv in tier.intervals:
            for w in iv.text.split():
                w = unicodedata.normalize("NFC", w)
                words.add(w.casefold() if casefold else w)
    return sorted(words)


@dataclass
class PronunciationDictionary:
    entries: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def __len__(self):
        return len(self.entries)

    def validate(self, inventory: PhoneInventory | Iterable[PhoneInventory]) -> list[str]:
        """Messages for phones outside the inventory (or union of inventories)."""
        if isinstance(inventory, PhoneInventory):
            inventory = [inventory]
        allowed = frozenset().union(*(inv.phones for inv in inventory))
        problems = []
        for word, phones in sorted(self.entries.items()):
            for p in phones:
                if p not in allowed:
                    problems.append(f"{word}: /{p}/ not in inventory")
        return problems


def build_dictionary(
    words: Iterable[str], rules: G2PRuleSet
) -> tuple[PronunciationDictionary, list[UnmappedGrapheme]]:
    d = PronunciationDictionary()
    problems: list[UnmappedGrapheme] = []
    for w in words:
        phones, unmapped = apply_g2p(w, rules)
        problems.extend(unmapped)
        if phones:
            d.entries[w] = tuple(phones)
    return d, problems


def serialize_dictionary(d: PronunciationDictionary) -> bytes:
    """``word<TAB>phone phone ...`` per line, words sorted, UTF-8."""
    lines = [f"{w}\t{' '.join(d.entries[w])}\n" for w in sorted(d.entries)]
    return "".join(lines).encode("utf-8")


def parse_dictionary(data: bytes | str) -> PronunciationDictionary:
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    d = PronunciationDictionary()
    for line in text.splitlines():
        if not line.strip():
            continue
        word, _, phones = line.partition("\t")
        d.entries[word] = tuple(phones.split())
    return d
