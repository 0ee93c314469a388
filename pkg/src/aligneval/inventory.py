"""Phone inventories, natural-class maps and train/test coverage."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from .errors import InvalidClassMap, UnknownPhone

DEFAULT_CLASS_ORDER = (
    "stop",
    "nasal",
    "trill",
    "lateral",
    "approximant",
    "rhotic-approximant",
    "short-vowel",
    "long-vowel",
)
VOWEL_CLASSES = frozenset({"short-vowel", "long-vowel"})


@dataclass(frozen=True)
class PhoneInventory:
    language: str
    phones: frozenset[str]
    long_counterparts: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "phones", frozenset(self.phones))
        if not self.phones:
            raise ValueError(f"inventory for {self.language!r} is empty")
        for short, long in self.long_counterparts.items():
            if short == long:
                raise ValueError(f"{self.language}: long /{long}/ must differ from short /{short}/")
            if short not in self.phones or long not in self.phones:
                raise ValueError(f"{self.language}: long pair {short}/{long} not in inventory")

    def __contains__(self, phone: str) -> bool:
        return phone in self.phones


@dataclass(frozen=True)
class NaturalClassMap:
    """Partition of phones into manner classes.

    Class order is kept as declared and drives row order in figures.
    """

    classes: Mapping[str, frozenset[str]]
    _lookup: Mapping[str, str] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        classes = {label: frozenset(phones) for label, phones in self.classes.items()}
        lookup: dict[str, str] = {}
        for label, phones in classes.items():
            for p in phones:
                if p in lookup:
                    raise InvalidClassMap(f"/{p}/ is in both {lookup[p]!r} and {label!r}")
                lookup[p] = label
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "_lookup", lookup)

    @property
    def labels(self) -> list[str]:
        return list(self.classes)

    @property
    def phones(self) -> frozenset[str]:
        return frozenset(self._lookup)

    def __contains__(self, phone: str) -> bool:
        return phone in self._lookup

    def classify(self, phone: str) -> str:
        return classify(phone, self)

    def check_covers(self, inventories: Iterable[PhoneInventory]) -> None:
        """Raise if any inventory phone has no class."""
        missing = sorted(
            f"{inv.language}:/{p}/" for inv in inventories for p in inv.phones if p not in self._lookup
        )
        if missing:
            raise InvalidClassMap("phones without a natural class: " + ", ".join(missing))

    def vowels(self) -> frozenset[str]:
        return frozenset(p for p, c in self._lookup.items() if c in VOWEL_CLASSES)

    @classmethod
    def from_json(cls, doc: Mapping[str, Iterable[str]], inventories: Iterable[PhoneInventory] = ()) -> "NaturalClassMap":
        cmap = cls({k: frozenset(v) for k, v in doc.items()})
        cmap.check_covers(inventories)
        return cmap

    @classmethod
    def load(cls, path: str | Path, inventories: Iterable[PhoneInventory] = ()) -> "NaturalClassMap":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")), inventories)

    def to_json(self) -> dict:
        return {k: sorted(v) for k, v in self.classes.items()}


def classify(phone: str, class_map: NaturalClassMap) -> str:
    try:
        return class_map._lookup[phone]
    except KeyError:
        raise UnknownPhone(phone) from None


@dataclass(frozen=True)
class CoverageReport:
    test_language: str
    missing: frozenset[str]
    # phone -> train language -> present
    presence: Mapping[str, Mapping[str, bool]]

    def to_json(self) -> dict:
        return {
            "test_language": self.test_language,
            "missing": sorted(self.missing),
            "presence": {p: dict(v) for p, v in sorted(self.presence.items())},
        }


def coverage_report(test: PhoneInventory, train: Iterable[PhoneInventory]) -> CoverageReport:
    """Test-language phones absent from every training inventory."""
    train = list(train)
    presence = {p: {inv.language: p in inv.phones for inv in train} for p in test.phones}
    seen = frozenset().union(*(inv.phones for inv in train)) if train else frozenset()
    return CoverageReport(test.language, test.phones - seen, presence)


# shipped tables


def load_inventories(path: str | Path | None = None) -> dict[str, PhoneInventory]:
    """Inventories keyed by language tag; the shipped table when ``path`` is None."""
    if path is None:
        doc = json.loads(resources.files("aligneval.data").joinpath("inventories.json").read_text("utf-8"))
    else:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    out = {}
    for lang, entry in doc.items():
        if lang.startswith("_"):
            continue
        out[lang] = PhoneInventory(
            lang, frozenset(entry["phones"]), dict(entry.get("long_counterparts", {}))
        )
    return out


def default_class_map() -> NaturalClassMap:
    doc = json.loads(resources.files("aligneval.data").joinpath("classes.json").read_text("utf-8"))
    doc = {k: v for k, v in doc.items() if not k.startswith("_")}
    return NaturalClassMap.from_json(doc, load_inventories().values())


BIG5 = ("Bardi", "Gija", "Ngaanyatjarra", "Yan-nhangu", "Yidiny")
