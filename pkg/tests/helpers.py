"""Fixture builders shared by the test modules."""

from __future__ import annotations

import codecs
import csv
from pathlib import Path

import numpy as np
from scipy.signal import lfilter

from aligneval.audio import encode_wav
from aligneval.textgrid import (
    Interval,
    IntervalTier,
    Point,
    PointTier,
    TextGrid,
    serialize_short,
    serialize_textgrid,
)

# TextGrid corpus


def tier_from_labels(name: str, labels, start: float = 0.0, step: float = 0.1) -> IntervalTier:
    """Contiguous tier, one interval per label, boundaries on a decimal grid."""
    ivs = []
    for i, lab in enumerate(labels):
        a = round(start + i * step, 6)
        b = round(start + (i + 1) * step, 6)
        ivs.append(Interval(a, b, lab))
    return IntervalTier(name, ivs[0].xmin, ivs[-1].xmax, tuple(ivs))


def two_tier_grid(words, phones_per_word, step: float = 0.05) -> TextGrid:
    """Word tier plus a phone tier whose phones exactly tile each word."""
    w_ivs, p_ivs = [], []
    t = 0.0
    for w, phones in zip(words, phones_per_word):
        w0 = t
        for p in phones:
            t1 = round(t + step, 6)
            p_ivs.append(Interval(t, t1, p))
            t = t1
        w_ivs.append(Interval(w0, t, w))
    end = t
    return TextGrid(
        0.0,
        end,
        (IntervalTier("words", 0.0, end, tuple(w_ivs)), IntervalTier("phones", 0.0, end, tuple(p_ivs))),
    )


def fixture_grids() -> list[tuple[str, bytes]]:
    """Twenty-three TextGrid files in the encodings and layouts met in practice."""
    rng = np.random.default_rng(20240501)
    phones = ["ŋ", "a", "j", "b", "aː", "r", "ɻ", "i", "u", "l", "m", "n", "ɲ", "d"]
    files: list[tuple[str, bytes]] = []
    for k in range(12):
        n = int(rng.integers(1, 9))
        labs = [phones[int(i)] for i in rng.integers(0, len(phones), n)]
        labs = [lab if rng.random() > 0.2 else "" for lab in labs]
        step = float(rng.choice([0.01, 0.05, 0.1, 0.125, 0.333]))
        g = TextGrid(0.0, round(n * step, 6), (tier_from_labels("phones", labs, step=step),))
        # some grids get a word tier spanning everything
        if k % 3 == 0:
            g = TextGrid(g.xmin, g.xmax, (IntervalTier("words", g.xmin, g.xmax, (Interval(g.xmin, g.xmax, "ngay"),)),) + g.tiers)
        data = serialize_textgrid(g)
        kind = k % 4
        if kind == 1:
            data = serialize_short(g)
        elif kind == 2:
            data = codecs.BOM_UTF16_LE + data.decode("utf-8").encode("utf-16-le")
        elif kind == 3:
            data = codecs.BOM_UTF8 + data
        files.append((f"random_{k:02d}.TextGrid", data))

    quoted = TextGrid(0.0, 1.0, (tier_from_labels("words", ['say "ngay"', '""', 'a "b" c', ""], step=0.25),))
    files.append(("quoted_long.TextGrid", serialize_textgrid(quoted)))
    files.append(("quoted_short.TextGrid", serialize_short(quoted)))
    files.append(("quoted_utf16be.TextGrid", codecs.BOM_UTF16_BE + serialize_textgrid(quoted).decode().encode("utf-16-be")))

    empty = TextGrid(0.0, 2.0, (IntervalTier("words", 0.0, 2.0, (Interval(0.0, 2.0, ""),)),))
    files.append(("empty_tier.TextGrid", serialize_textgrid(empty)))
    files.append(("no_tiers.TextGrid", serialize_textgrid(TextGrid(0.0, 1.5, ()))))

    points = TextGrid(
        0.0, 1.0,
        (tier_from_labels("phones", ["a", "b"], step=0.5), PointTier("tones", 0.0, 1.0, (Point(0.25, "H"), Point(0.75, "L")))),
    )
    files.append(("point_tier.TextGrid", serialize_textgrid(points)))
    files.append(("point_tier_short.TextGrid", serialize_short(points)))

    two = two_tier_grid(["ngay", "bardi"], [["ŋ", "a", "j"], ["b", "a", "r", "d", "i"]])
    files.append(("two_tier.TextGrid", serialize_textgrid(two)))
    latin = TextGrid(0.0, 1.0, (tier_from_labels("words", ["café", "naïve"], step=0.5),))
    files.append(("latin1.TextGrid", serialize_textgrid(latin).decode().encode("latin-1")))
    # float dust on shared boundaries, snapped on read
    dusty = serialize_textgrid(TextGrid(0.0, 0.3, (tier_from_labels("phones", ["a", "b", "c"]),)))
    files.append(("dusty.TextGrid", dusty.replace(b"xmin = 0.1 ", b"xmin = 0.1000000000004 ", 1)))
    # Praat-written style: CRLF line ends and an offset start
    off = TextGrid(1.5, 3.0, (tier_from_labels("phones", ["m", "a", "n"], start=1.5, step=0.5),))
    files.append(("crlf_offset.TextGrid", serialize_textgrid(off).replace(b"\n", b"\r\n")))
    return files


# audio


def resonator(x: np.ndarray, freq: float, bw: float, fs: float) -> np.ndarray:
    """Two-pole resonator with unit gain at 0 Hz."""
    r = np.exp(-np.pi * bw / fs)
    c = 2 * r * np.cos(2 * np.pi * freq / fs)
    return lfilter([1 - c + r * r], [1, -c, r * r], x)


def glottal_source(f0: float, fs: int, n: int, rng, jitter: float = 0.01) -> np.ndarray:
    """Impulse train with cycle-to-cycle jitter, tilted -6 dB/octave above 50 Hz.

    The tilt stands for the glottal roll-off combined with lip radiation,
    which is what a 50 Hz pre-emphasis is meant to undo.
    """
    pulses = np.zeros(n)
    t = rng.uniform(0, fs / f0)
    while t < n:
        pulses[int(t)] = 1.0
        t += fs / (f0 * (1 + jitter * rng.standard_normal()))
    return lfilter([1.0], [1, -np.exp(-2 * np.pi * 50 / fs)], pulses)


def synth_vowel(
    f1: float,
    f2: float,
    duration: float,
    fs: int = 16000,
    f0: float = 110.0,
    snr_db: float | None = 30.0,
    rng=None,
    bandwidths=(80.0, 100.0),
) -> np.ndarray:
    """Voiced source through an F1 and an F2 resonator in cascade, plus white
    noise at ``snr_db`` relative to the signal power."""
    rng = np.random.default_rng(0) if rng is None else rng
    n = int(round(duration * fs))
    y = resonator(resonator(glottal_source(f0, fs, n, rng), f1, bandwidths[0], fs), f2, bandwidths[1], fs)
    y = 0.5 * y / np.abs(y).max()
    if snr_db is not None:
        y = y + rng.standard_normal(n) * np.std(y) * 10 ** (-snr_db / 20)
    return y


def ar2_noise(freq: float, radius: float, fs: int, n: int, rng) -> np.ndarray:
    th = 2 * np.pi * freq / fs
    return lfilter([1.0], [1, -2 * radius * np.cos(th), radius * radius], rng.standard_normal(n))


# evaluation corpus


def write_manifest_csv(path: Path, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["path_audio", "path_textgrid", "language", "split"])
        for r in rows:
            w.writerow(r)


EVAL_WORDS = [
    ("ngaya", ["ŋ", "a", "j", "a"]),
    ("bardi", ["b", "a", "ɻ", "d", "i"]),
    ("wuna", ["w", "u", "n", "a"]),
    ("ralu", ["r", "a", "l", "u"]),
    ("maa", ["m", "aː"]),
]


def build_eval_corpus(root: Path, n_files: int = 4, shifts_ms: dict[str, float] | None = None,
                      phone_dur: float = 0.08, fs: int = 16000) -> Path:
    """Gold grids, audio and one hypothesis directory per model.

    Every hypothesis is the gold phone tier with each interior onset moved
    by the model's shift in ``shifts_ms``; ``split`` alternates
    seen/unseen.  Returns the manifest path.
    """
    shifts_ms = {"same": 0.0} if shifts_ms is None else shifts_ms
    gold_dir = root / "gold"
    audio_dir = root / "audio"
    gold_dir.mkdir(parents=True)
    audio_dir.mkdir()
    rng = np.random.default_rng(7)
    rows = []
    grids = {}
    for k in range(n_files):
        words = [EVAL_WORDS[(k + j) % len(EVAL_WORDS)] for j in range(3)]
        w_ivs, p_ivs = [], []
        t = 0.0
        p_ivs_sil = Interval(0.0, 0.2, "")
        p_ivs.append(p_ivs_sil)
        w_ivs.append(Interval(0.0, 0.2, ""))
        t = 0.2
        for word, phones in words:
            w0 = t
            for p in phones:
                t1 = round(t + phone_dur * (2 if "ː" in p else 1), 6)
                p_ivs.append(Interval(t, t1, p))
                t = t1
            w_ivs.append(Interval(w0, t, word))
        end = round(t + 0.2, 6)
        p_ivs.append(Interval(t, end, ""))
        w_ivs.append(Interval(t, end, ""))
        grid = TextGrid(0.0, end, (IntervalTier("words", 0.0, end, tuple(w_ivs)), IntervalTier("phones", 0.0, end, tuple(p_ivs))))
        name = f"utt{k:02d}"
        (gold_dir / f"{name}.TextGrid").write_bytes(serialize_textgrid(grid))
        # audio: vowels voiced with their target formants, everything else noise
        n = int(round(end * fs))
        x = 0.01 * rng.standard_normal(n)
        targets = {"a": (700, 1200), "aː": (700, 1200), "i": (300, 2300), "u": (350, 800)}
        for iv in p_ivs:
            if iv.text in targets:
                i0, i1 = int(round(iv.xmin * fs)), int(round(iv.xmax * fs))
                f1, f2 = targets[iv.text]
                x[i0:i1] = synth_vowel(f1, f2, (i1 - i0) / fs, fs, rng=rng, snr_db=40)
        (audio_dir / f"{name}.wav").write_bytes(encode_wav(x, fs))
        grids[name] = grid
        rows.append((f"audio/{name}.wav", f"gold/{name}.TextGrid", "Yidiny", "seen" if k % 2 == 0 else "unseen"))
    for model, shift in shifts_ms.items():
        d = root / "hyp" / model
        d.mkdir(parents=True)
        for name, grid in grids.items():
            phones = grid.tiers[1]
            bounds = [iv.xmin for iv in phones.intervals] + [phones.xmax]
            moved = [bounds[0]] + [round(b + shift / 1000, 6) for b in bounds[1:-1]] + [bounds[-1]]
            ivs = tuple(Interval(moved[i], moved[i + 1], iv.text) for i, iv in enumerate(phones.intervals))
            hyp = TextGrid(grid.xmin, grid.xmax, (grid.tiers[0], IntervalTier("phones", phones.xmin, phones.xmax, ivs)))
            (d / f"{name}.TextGrid").write_bytes(serialize_textgrid(hyp))
    manifest = root / "manifest.csv"
    write_manifest_csv(manifest, rows)
    return manifest


# dataset bookkeeping fixture

# recorded minutes per language of the six-language corpus
CORPUS_MINUTES = {"Bardi": 108, "Gija": 157, "Kunbarlang": 16, "Ngaanyatjarra": 53, "Yan-nhangu": 290, "Yidiny": 50}
HELD_OUT_YIDINY = 12


def corpus_minutes_manifest(root, rate: int = 10):
    """One silent WAV per language and split at a tiny sample rate, so minutes are exact.

    Yidiny is split into 38 training and 12 held-out minutes; Kunbarlang
    is test-only; the other four languages are training data.
    """
    rows = []
    empty_grid = serialize_textgrid(TextGrid(0.0, 1.0, (IntervalTier("words", 0.0, 1.0, (Interval(0.0, 1.0, ""),)),)))
    (root / "x.TextGrid").write_bytes(empty_grid)
    parts = []
    for lang, minutes in CORPUS_MINUTES.items():
        if lang == "Yidiny":
            parts += [(lang, minutes - HELD_OUT_YIDINY, "train"), (lang, HELD_OUT_YIDINY, "test")]
        elif lang == "Kunbarlang":
            parts.append((lang, minutes, "test"))
        else:
            parts.append((lang, minutes, "train"))
    for k, (lang, minutes, split) in enumerate(parts):
        name = f"f{k}.wav"
        (root / name).write_bytes(encode_wav(np.zeros(minutes * 60 * rate), rate))
        rows.append((name, "x.TextGrid", lang, split))
    write_manifest_csv(root / "manifest.csv", rows)
    return root / "manifest.csv"
