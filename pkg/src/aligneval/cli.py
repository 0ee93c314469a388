"""Command-line driver: validate, prep, dict, eval and vowels over a manifest.

Exit status is 0 on success, 1 when some input file could not be used and
2 when the configuration itself is unusable.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence, TypeVar

from . import __version__
from .audio import read_wav
from .boundary import (
    DEFAULT_SILENCE,
    aggregate,
    diffs_csv,
    flag_misalignments,
    flags_csv,
    histogram,
    match_tiers,
    normalize_label,
    onset_diffs,
    stats_csv,
    stats_json,
)
from .corpus import (
    CleaningRules,
    ManifestEntry,
    assemble_dataset,
    clean_tier,
    clean_transcript,
    filter_short_words,
    read_manifest,
    write_manifest,
)
from .errors import AlignEvalError, ConfigError, FormantError
from .g2p import G2PRuleSet, PronunciationDictionary, build_dictionary, serialize_dictionary, shipped_rules
from .inventory import NaturalClassMap, PhoneInventory, default_class_map, load_inventories
from .report import FigureSpec, render_heatmap, render_histogram_grid, render_vowel_chart
from .textgrid import IntervalTier, TextGrid, read_textgrid, serialize_textgrid
from .vowels import TOKEN_COLUMNS, FormantConfig, VowelToken, build_ellipses, measure_vowel

log = logging.getLogger("aligneval")

CONFIG_ENV = "ALIGNEVAL_CONFIG"
GOLD = "gold"
STD_MODES = ("include-all", "in-range")

T = TypeVar("T")
R = TypeVar("R")


# configuration


@dataclass
class RunConfig:
    manifest: Path | None = None
    words_tier: str = "words"
    phones_tier: str = "phones"
    cleaning_rules: Path | None = None
    class_map: Path | None = None
    inventories: Path | None = None
    # language tag -> rule file; languages not listed use the shipped tables
    g2p_rules: dict[str, Path] = field(default_factory=dict)
    formant_config: Path | None = None
    out: Path = Path("aligneval-out")
    model_tag: str = ""
    setting_tag: str = ""
    gold_dir: Path | None = None
    hyp: dict[str, Path] = field(default_factory=dict)
    workers: int = 1
    strict: bool = False
    std_mode: str = "include-all"
    threshold_ms: float = 100.0
    flag_limit: int = 100
    axis_multiplier: float = 1.0
    # True once the config file or a flag sets axis_multiplier explicitly
    axis_multiplier_set: bool = False
    silence: frozenset[str] = DEFAULT_SILENCE

    # loaded resources, filled by load_resources()
    rules: CleaningRules = field(default_factory=CleaningRules.default, repr=False)
    classes: NaturalClassMap | None = field(default=None, repr=False)
    inventory: dict[str, PhoneInventory] = field(default_factory=dict, repr=False)
    formants: FormantConfig = field(default_factory=FormantConfig, repr=False)

    @classmethod
    def from_json(cls, doc: dict, base: Path) -> "RunConfig":
        def path(v):
            return None if v in (None, "") else (base / v)

        cfg = cls()
        tiers = doc.get("tiers", {})
        known = {
            "manifest", "tiers", "cleaning_rules", "class_map", "inventories", "g2p_rules",
            "formant_config", "out", "model_tag", "setting_tag", "gold_dir", "hyp", "workers",
            "strict", "std_mode", "threshold_ms", "flag_limit", "axis_multiplier", "silence",
        }
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.manifest = path(doc.get("manifest"))
        cfg.words_tier = tiers.get("words", cfg.words_tier)
        cfg.phones_tier = tiers.get("phones", cfg.phones_tier)
        for key in ("cleaning_rules", "class_map", "inventories", "formant_config", "gold_dir"):
            setattr(cfg, key, path(doc.get(key)))
        if "out" in doc:
            cfg.out = base / doc["out"]
        cfg.g2p_rules = {lang: base / p for lang, p in doc.get("g2p_rules", {}).items()}
        cfg.hyp = {tag: base / p for tag, p in doc.get("hyp", {}).items()}
        for key in ("model_tag", "setting_tag", "std_mode"):
            if key in doc:
                setattr(cfg, key, str(doc[key]))
        for key, conv in (("workers", int), ("flag_limit", int), ("threshold_ms", float), ("axis_multiplier", float)):
            if key in doc:
                setattr(cfg, key, conv(doc[key]))
        cfg.axis_multiplier_set = "axis_multiplier" in doc
        cfg.strict = bool(doc.get("strict", False))
        if "silence" in doc:
            cfg.silence = frozenset(normalize_label(s) for s in doc["silence"])
        return cfg

    def load_resources(self, need_manifest: bool = True) -> None:
        """Check every referenced file and load it; all problems are reported at once."""
        problems = []
        if need_manifest and self.manifest is None:
            problems.append("no manifest given (--manifest or 'manifest' in the config)")
        elif self.manifest is not None and not self.manifest.is_file():
            problems.append(f"manifest not found: {self.manifest}")
        if self.workers < 1:
            problems.append("workers must be >= 1")
        if self.std_mode not in STD_MODES:
            problems.append(f"std_mode must be one of {STD_MODES}")
        if self.threshold_ms <= 0:
            problems.append("threshold_ms must be positive")
        if self.flag_limit < 1:
            problems.append("flag_limit must be >= 1")
        if self.axis_multiplier <= 0:
            problems.append("axis_multiplier must be positive")

        def attempt(what: str, fn):
            try:
                return fn()
            except (OSError, ValueError, KeyError, TypeError, AlignEvalError) as e:
                problems.append(f"{what}: {e}")
                return None

        if self.cleaning_rules is not None:
            self.rules = attempt(f"cleaning rules {self.cleaning_rules}", lambda: CleaningRules.load(self.cleaning_rules)) or self.rules
        inv = attempt("inventories", lambda: load_inventories(self.inventories))
        self.inventory = inv or {}
        if self.class_map is not None:
            self.classes = attempt(
                f"class map {self.class_map}",
                lambda: NaturalClassMap.load(self.class_map, self.inventory.values()),
            )
        else:
            self.classes = attempt("shipped class map", default_class_map)
        if self.formant_config is not None:
            fc = attempt(f"formant config {self.formant_config}", lambda: FormantConfig.load(self.formant_config))
            if fc is not None:
                self.formants = fc
                extra = attempt("formant config", lambda: json.loads(self.formant_config.read_text("utf-8")))
                if extra and "axis_multiplier" in extra and not self.axis_multiplier_set:
                    self.axis_multiplier = float(extra["axis_multiplier"])
        for lang, p in sorted(self.g2p_rules.items()):
            attempt(f"g2p rules for {lang} ({p})", lambda p=p, lang=lang: G2PRuleSet.load(p, lang))
        for tag, d in sorted(self.hyp.items()):
            if not d.is_dir():
                problems.append(f"hypothesis directory for {tag!r} not found: {d}")
        if self.gold_dir is not None and not self.gold_dir.is_dir():
            problems.append(f"gold directory not found: {self.gold_dir}")
        if problems:
            raise ConfigError("; ".join(problems))


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file (--config or $ALIGNEVAL_CONFIG), then flags."""
    config_path = args.config or os.environ.get(CONFIG_ENV)
    if config_path:
        p = Path(config_path)
        try:
            doc = json.loads(p.read_text(encoding="utf-8"))
        except (OSError, ValueError) as e:
            raise ConfigError(f"cannot read config {p}: {e}") from None
        if not isinstance(doc, dict):
            raise ConfigError(f"config {p} must hold a JSON object")
        cfg = RunConfig.from_json(doc, p.parent)
    else:
        cfg = RunConfig()
    if args.manifest:
        cfg.manifest = Path(args.manifest)
    if args.out:
        cfg.out = Path(args.out)
    if args.model_tag:
        cfg.model_tag = args.model_tag
    if args.setting_tag:
        cfg.setting_tag = args.setting_tag
    if args.strict:
        cfg.strict = True
    if args.workers is not None:
        cfg.workers = args.workers
    if args.words_tier:
        cfg.words_tier = args.words_tier
    if args.phones_tier:
        cfg.phones_tier = args.phones_tier
    for key in ("cleaning_rules", "class_map", "inventories", "formant_config", "gold_dir"):
        v = getattr(args, key, None)
        if v:
            setattr(cfg, key, Path(v))
    for item in getattr(args, "hyp", None) or []:
        tag, sep, d = item.partition("=")
        if not sep:
            if not cfg.model_tag:
                raise ConfigError(f"--hyp {item!r} needs TAG=DIR or a --model-tag")
            tag, d = cfg.model_tag, item
        cfg.hyp[tag] = Path(d)
    for key in ("std_mode", "threshold_ms", "flag_limit", "axis_multiplier"):
        v = getattr(args, key, None)
        if v is not None:
            setattr(cfg, key, v)
            if key == "axis_multiplier":
                cfg.axis_multiplier_set = True
    return cfg


# plumbing


def write_atomic(path: Path, data: bytes | str) -> None:
    """Write to a temporary file beside ``path`` and rename it into place."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path: Path, doc) -> None:
    write_atomic(path, json.dumps(doc, indent=1, ensure_ascii=False, sort_keys=False) + "\n")


def pmap(fn: Callable[[T], R], items: Sequence[T], workers: int) -> list[R]:
    """Map preserving input order; threads only when workers > 1."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def safe_name(tag: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", tag) or "_"


def find_tier(grid: TextGrid, name: str) -> IntervalTier | None:
    """Tier called ``name``; failing that, the single tier named ``<speaker> - name``."""
    tier = grid.get_tier(name)
    if tier is None:
        suffixed = [t for t in grid.tiers if t.name.endswith(f" - {name}")]
        if len(suffixed) == 1:
            tier = suffixed[0]
    return tier


def error_entry(file, e: Exception) -> dict:
    return {"file": str(file), "error": type(e).__name__, "message": str(e)}


def settings_for(cfg: RunConfig, entries: Iterable[ManifestEntry]) -> list[str]:
    return [cfg.setting_tag or e.split or "all" for e in entries]


def gold_path(cfg: RunConfig, entry: ManifestEntry) -> Path:
    return cfg.gold_dir / entry.path_textgrid.name if cfg.gold_dir else entry.path_textgrid


def ordered_unique(xs: Iterable[str]) -> list[str]:
    out: list[str] = []
    for x in xs:
        if x not in out:
            out.append(x)
    return out


# subcommands


def cmd_validate(cfg: RunConfig) -> int:
    """Parse every TextGrid and WAV in the manifest and report what fails."""
    entries = read_manifest(cfg.manifest)
    if not entries:
        log.warning("manifest %s lists no files", cfg.manifest)

    def check(entry: ManifestEntry) -> list[dict]:
        errs = []
        try:
            grid = read_textgrid(entry.path_textgrid)
            for name in (cfg.words_tier, cfg.phones_tier):
                if find_tier(grid, name) is None:
                    errs.append({"file": str(entry.path_textgrid), "error": "MissingTier",
                                 "message": f"no tier named {name!r}"})
        except (OSError, AlignEvalError) as e:
            errs.append(error_entry(entry.path_textgrid, e))
        try:
            read_wav(entry.path_audio)
        except (OSError, AlignEvalError) as e:
            errs.append(error_entry(entry.path_audio, e))
        return errs

    errors = [e for errs in pmap(check, entries, cfg.workers) for e in errs]
    report = {"files": len(entries), "errors": errors}
    write_json(cfg.out / "validate.json", report)
    for e in errors:
        print(f"{e['file']}: {e['error']}: {e['message']}", file=sys.stderr)
    print(f"{len(entries)} manifest rows, {len(errors)} errors")
    return 1 if errors else 0


def cmd_prep(cfg: RunConfig) -> int:
    """Clean word tiers, blank short words, and write a new manifest plus summary."""
    entries = read_manifest(cfg.manifest)
    out_grids = cfg.out / "textgrids"

    def prep(entry: ManifestEntry):
        try:
            grid = read_textgrid(entry.path_textgrid)
        except (OSError, AlignEvalError) as e:
            return None, error_entry(entry.path_textgrid, e)
        words = find_tier(grid, cfg.words_tier)
        note = None
        if words is None:
            note = {"file": str(entry.path_textgrid), "warning": f"no tier named {cfg.words_tier!r}; copied unchanged"}
        else:
            cleaned = filter_short_words(clean_tier(words, cfg.rules), cfg.rules.min_word_duration)
            grid = grid.replace_tier(words.name, cleaned)
        dest = out_grids / safe_name(entry.language) / entry.path_textgrid.name
        write_atomic(dest, serialize_textgrid(grid))
        return replace(entry, path_textgrid=dest), note

    results = pmap(prep, entries, cfg.workers)
    errors = [r[1] for r in results if r[0] is None]
    notes = [r[1] for r in results if r[0] is not None and r[1] is not None]
    kept = [r[0] for r in results if r[0] is not None]
    summary = assemble_dataset(entries, check_textgrids=False)
    summary_doc = summary.to_json()
    summary_doc["errors"] = summary.errors + errors
    summary_doc["warnings"] = notes
    cfg.out.mkdir(parents=True, exist_ok=True)
    tmp = cfg.out / ".manifest.csv.tmp"
    write_manifest(tmp, kept)
    os.replace(tmp, cfg.out / "manifest.csv")
    write_json(cfg.out / "summary.json", summary_doc)
    for lang, minutes in sorted(summary.minutes_by_language.items()):
        print(f"{lang}\t{minutes:g} min")
    print(f"total\t{summary.total_minutes:g} min")
    return 1 if summary_doc["errors"] else 0


def cmd_dict(cfg: RunConfig) -> int:
    """One merged pronunciation dictionary over every language in the manifest."""
    entries = read_manifest(cfg.manifest)
    errors: list[dict] = []
    words_by_lang: dict[str, set[str]] = {}
    for entry in entries:
        try:
            grid = read_textgrid(entry.path_textgrid)
        except (OSError, AlignEvalError) as e:
            errors.append(error_entry(entry.path_textgrid, e))
            continue
        tier = find_tier(grid, cfg.words_tier)
        if tier is None:
            errors.append({"file": str(entry.path_textgrid), "error": "MissingTier",
                           "message": f"no tier named {cfg.words_tier!r}"})
            continue
        bucket = words_by_lang.setdefault(entry.language, set())
        for iv in tier.intervals:
            for w in clean_transcript(iv.text, cfg.rules).split():
                bucket.add(normalize_label(w).casefold())

    merged = PronunciationDictionary()
    unmapped, invalid, conflicts = [], [], []
    for lang in sorted(words_by_lang):
        try:
            rules = G2PRuleSet.load(cfg.g2p_rules[lang], lang) if lang in cfg.g2p_rules else shipped_rules(lang)
        except KeyError as e:
            errors.append({"file": "", "error": "NoRules", "message": f"{lang}: {e}"})
            continue
        d, problems = build_dictionary(sorted(words_by_lang[lang]), rules)
        unmapped += [{"language": lang, "word": p.word, "position": p.position, "char": p.char} for p in problems]
        if lang in cfg.inventory:
            invalid += [{"language": lang, "message": m} for m in d.validate(cfg.inventory[lang])]
        for w, phones in sorted(d.entries.items()):
            if w in merged.entries and merged.entries[w] != phones:
                conflicts.append({"word": w, "kept": " ".join(merged.entries[w]), "language": lang,
                                  "dropped": " ".join(phones)})
                continue
            merged.entries.setdefault(w, phones)
    if not merged.entries:
        log.warning("no words found; the dictionary is empty")
    write_atomic(cfg.out / "dictionary.txt", serialize_dictionary(merged))
    write_json(cfg.out / "dict_diagnostics.json", {
        "entries": len(merged), "unmapped_graphemes": unmapped, "inventory_violations": invalid,
        "conflicts": conflicts, "errors": errors,
    })
    print(f"{len(merged)} entries, {len(unmapped)} unmapped graphemes, {len(invalid)} inventory violations")
    return 1 if errors else 0


def _require_hyp(cfg: RunConfig) -> None:
    if not cfg.hyp:
        raise ConfigError("no hypothesis directories (--hyp TAG=DIR or 'hyp' in the config)")


def cmd_eval(cfg: RunConfig) -> int:
    """Onset-difference tables, histogram grid, heatmaps and flagged misalignments."""
    _require_hyp(cfg)
    entries = read_manifest(cfg.manifest)
    settings = settings_for(cfg, entries)
    models = list(cfg.hyp)
    class_map = cfg.classes

    def evaluate(job):
        model, idx = job
        entry = entries[idx]
        hyp_file = cfg.hyp[model] / entry.path_textgrid.name
        if not hyp_file.is_file():
            return [], [], [{"model": model, "file": str(hyp_file), "error": "MissingHypothesis",
                             "message": "no hypothesis TextGrid for this file"}]
        try:
            gold = read_textgrid(gold_path(cfg, entry))
            hyp = read_textgrid(hyp_file)
            gp, hp = find_tier(gold, cfg.phones_tier), find_tier(hyp, cfg.phones_tier)
            if gp is None or hp is None:
                return [], [], [{"model": model, "file": str(hyp_file), "error": "MissingTier",
                                 "message": f"no tier named {cfg.phones_tier!r} in gold or hypothesis"}]
            pairs, diags = match_tiers(gp, hp, find_tier(gold, cfg.words_tier), entry.path_textgrid.name, cfg.silence)
        except (OSError, AlignEvalError) as e:
            return [], [], [{"model": model, **error_entry(hyp_file, e)}]
        return onset_diffs(pairs), [dict(d.to_json(), model=model) for d in diags], []

    jobs = [(m, i) for m in models for i in range(len(entries))]
    results = dict(zip(jobs, pmap(evaluate, jobs, cfg.workers)))

    col_settings = ordered_unique(settings)
    in_range_only = cfg.std_mode == "in-range"
    all_stats, flag_rows, match_diags, problems = [], [], [], []
    hist_matrix, hist_doc = [], []
    for model in models:
        row = []
        for setting in col_settings:
            diffs = []
            for i in range(len(entries)):
                if settings[i] != setting:
                    continue
                d, diag, prob = results[(model, i)]
                diffs += d
                match_diags += diag
                problems += prob
            if diffs:
                write_atomic(cfg.out / "diffs" / f"{safe_name(model)}__{safe_name(setting)}.csv", diffs_csv(diffs, class_map))
            try:
                all_stats += aggregate(diffs, class_map, "class", model, setting, in_range_only)
            except AlignEvalError as e:
                problems.append({"model": model, "file": "", "error": type(e).__name__, "message": str(e)})
            h = histogram(diffs)
            row.append(h)
            hist_doc.append({"model": model, "setting": setting, **h.to_json()})
            flag_rows += [(model, setting, d) for d in flag_misalignments(diffs, cfg.threshold_ms, cfg.flag_limit)]
        hist_matrix.append(row)

    meta = {"std_mode": cfg.std_mode, "version": __version__}
    write_atomic(cfg.out / "stats.csv", stats_csv(all_stats))
    write_atomic(cfg.out / "stats.json", stats_json(all_stats))
    write_json(cfg.out / "histograms.json", hist_doc)
    write_atomic(cfg.out / "flagged.csv", flags_csv(flag_rows))
    write_atomic(
        cfg.out / "histogram_grid.svg",
        render_histogram_grid(hist_matrix, FigureSpec("histogram_grid", tuple(models), tuple(col_settings), metadata=meta)),
    )
    for setting in col_settings:
        rows = [s for s in all_stats if s.setting == setting]
        classes = [c for c in class_map.labels if any(s.group == c for s in rows)]
        for kind in ("means", "stds"):
            spec = FigureSpec(f"heatmap_{kind}", tuple(models), (setting,), title=f"{setting}: {kind}", metadata=meta)
            write_atomic(cfg.out / f"heatmap_{kind}_{safe_name(setting)}.svg", render_heatmap(rows, kind, spec, classes))
    write_json(cfg.out / "diagnostics.json", {"match": match_diags, "errors": problems})

    missing = [p for p in problems if p["error"] == "MissingHypothesis"]
    fatal = [p for p in problems if p["error"] != "MissingHypothesis"]
    for p in problems:
        print(f"{p['file']}: {p['error']}: {p['message']}", file=sys.stderr)
    print(f"{sum(s.n for s in all_stats)} phone pairs, {len(flag_rows)} flagged, {len(match_diags)} match diagnostics")
    return 1 if fatal or (cfg.strict and missing) else 0


def _vowel_tokens(cfg: RunConfig, audio, grid: TextGrid, vowels: frozenset[str], file: str, model: str):
    tokens, problems = [], []
    tier = find_tier(grid, cfg.phones_tier)
    if tier is None:
        return tokens, [{"model": model, "file": file, "error": "MissingTier", "message": f"no tier {cfg.phones_tier!r}"}]
    for iv in tier.intervals:
        if normalize_label(iv.text) not in vowels:
            continue
        iv = replace(iv, text=normalize_label(iv.text))
        try:
            tokens.append(measure_vowel(audio, iv, cfg.formants, file, model))
        except FormantError as e:
            problems.append({"model": model, "file": file, "error": type(e).__name__,
                             "message": f"{iv.text} [{iv.xmin}, {iv.xmax}]: {e}"})
    return tokens, problems


def cmd_vowels(cfg: RunConfig) -> int:
    """Per-token F1/F2 for gold and every model, ellipses, and vowel charts."""
    entries = read_manifest(cfg.manifest)
    settings = settings_for(cfg, entries)
    models = list(cfg.hyp)
    class_map = cfg.classes
    vowels = class_map.vowels()
    long_vowels = class_map.classes.get("long-vowel", frozenset())

    def measure(idx: int):
        entry = entries[idx]
        name = entry.path_textgrid.name
        try:
            audio = read_wav(entry.path_audio)
            gold = read_textgrid(gold_path(cfg, entry))
        except (OSError, AlignEvalError) as e:
            return [], [error_entry(entry.path_audio, e)], True
        tokens, problems = _vowel_tokens(cfg, audio, gold, vowels, name, GOLD)
        fatal = False
        for model in models:
            hyp_file = cfg.hyp[model] / name
            if not hyp_file.is_file():
                problems.append({"model": model, "file": str(hyp_file), "error": "MissingHypothesis",
                                 "message": "no hypothesis TextGrid for this file"})
                continue
            try:
                hyp = read_textgrid(hyp_file)
            except (OSError, AlignEvalError) as e:
                problems.append({"model": model, **error_entry(hyp_file, e)})
                fatal = True
                continue
            t, p = _vowel_tokens(cfg, audio, hyp, vowels, name, model)
            tokens += t
            problems += p
        return tokens, problems, fatal

    results = pmap(measure, list(range(len(entries))), cfg.workers)
    problems = [p for _, probs, _ in results for p in probs]
    fatal = any(f for _, _, f in results)

    lines = [",".join(TOKEN_COLUMNS + ("setting",))]
    by_setting: dict[str, list[VowelToken]] = {}
    for (tokens, _, _), setting in zip(results, settings):
        by_setting.setdefault(setting, []).extend(tokens)
        for t in tokens:
            lines.append(",".join(_csv_field(v) for v in (
                t.file, t.model, t.vowel, repr(t.f1_hz), repr(t.f2_hz),
                repr(t.interval.xmin), repr(t.interval.xmax), setting,
            )))
    write_atomic(cfg.out / "tokens.csv", "\n".join(lines) + "\n")

    ellipse_doc = []
    meta = {"axis_multiplier": repr(cfg.axis_multiplier), "version": __version__}
    n_tokens = 0
    for setting in ordered_unique(settings) or ["all"]:
        tokens = by_setting.get(setting, [])
        n_tokens += len(tokens)
        ellipses = build_ellipses(tokens, cfg.axis_multiplier)
        ellipse_doc += [dict(e.to_json(), setting=setting) for e in ellipses]
        for group, members in (("short", vowels - long_vowels), ("long", long_vowels)):
            chosen = [e for e in ellipses if e.vowel in members]
            gold = [e for e in chosen if e.model == GOLD]
            hyp = [e for e in chosen if e.model != GOLD]
            spec = FigureSpec("vowel_chart", tuple(models) or ("",), (setting,),
                              title=f"{setting}: {group} vowels", metadata=meta)
            write_atomic(cfg.out / f"vowels_{group}_{safe_name(setting)}.svg", render_vowel_chart(hyp, gold, spec))
    write_json(cfg.out / "ellipses.json", ellipse_doc)
    write_json(cfg.out / "vowel_diagnostics.json", {"errors": problems})
    if n_tokens == 0:
        log.warning("no vowel intervals were measured; charts are empty")
    missing = [p for p in problems if p["error"] == "MissingHypothesis"]
    print(f"{n_tokens} vowel tokens, {len(ellipse_doc)} ellipses, {len(problems)} diagnostics")
    return 1 if fatal or (cfg.strict and missing) else 0


def _csv_field(v: str) -> str:
    if any(c in v for c in ',"\n\r'):
        return '"' + v.replace('"', '""') + '"'
    return v


COMMANDS = {
    "validate": cmd_validate,
    "prep": cmd_prep,
    "dict": cmd_dict,
    "eval": cmd_eval,
    "vowels": cmd_vowels,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--manifest", help="CSV with path_audio, path_textgrid, language[, split]")
    common.add_argument("--config", help=f"run config JSON (default: ${CONFIG_ENV})")
    common.add_argument("--out", help="output directory")
    common.add_argument("--model-tag", help="model tag for a bare --hyp DIR")
    common.add_argument("--setting-tag", help="setting tag for every file (default: manifest split)")
    common.add_argument("--strict", action="store_true", help="missing hypothesis files are errors")
    common.add_argument("--workers", type=int, help="parallel file workers (default 1)")
    common.add_argument("--words-tier", help="word tier name (default 'words')")
    common.add_argument("--phones-tier", help="phone tier name (default 'phones')")
    common.add_argument("--cleaning-rules", help="cleaning rules JSON")
    common.add_argument("--class-map", help="natural class map JSON")
    common.add_argument("--inventories", help="phone inventories JSON")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aligneval", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="parse every TextGrid and WAV")
    sub.add_parser("prep", parents=[common], help="clean transcripts and summarise the corpus")
    sub.add_parser("dict", parents=[common], help="build the pronunciation dictionary")

    ev = sub.add_parser("eval", parents=[common], help="onset-boundary statistics and figures")
    ev.add_argument("--hyp", action="append", metavar="TAG=DIR", help="hypothesis TextGrids of one model (repeatable)")
    ev.add_argument("--gold-dir", help="gold TextGrids by file name (default: manifest paths)")
    ev.add_argument("--std-mode", choices=STD_MODES, help="keep or drop tokens outside [-205, 205] ms in the stats")
    ev.add_argument("--threshold-ms", type=float, help="misalignment threshold (default 100)")
    ev.add_argument("--flag-limit", type=int, help="flag at most this many per model and setting (default 100)")

    vw = sub.add_parser("vowels", parents=[common], help="vowel formants, ellipses and charts")
    vw.add_argument("--hyp", action="append", metavar="TAG=DIR")
    vw.add_argument("--gold-dir")
    vw.add_argument("--formant-config", help="formant analysis JSON")
    vw.add_argument("--axis-multiplier", type=float, help="ellipse semi-axis in standard deviations (default 1)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s: %(message)s",
    )
    try:
        cfg = build_config(args)
        cfg.load_resources()
        return COMMANDS[args.command](cfg)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2
    except (OSError, AlignEvalError, ValueError) as e:
        # e.g. an unreadable or malformed manifest
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
