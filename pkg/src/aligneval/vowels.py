"""Vowel formant measurement (Burg LPC) and per-category dispersion ellipses."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .audio import AudioBuffer, _sample_index, extract_segment, pre_emphasis, resample
from .errors import DegenerateFrame, NoVoicedFrames, RootFindingFailure, TooShort
from .textgrid import Interval

MIN_FORMANT_HZ = 50.0
MAX_BANDWIDTH_HZ = 400.0
# context kept on each side of a vowel so the resampler has real signal to work with
_CONTEXT_S = 0.01


@dataclass(frozen=True)
class FormantConfig:
    max_formants: int = 5
    ceiling_hz: float = 5000.0
    window_length_s: float = 0.025
    time_step_s: float = 0.00625
    pre_emphasis_from_hz: float = 50.0
    # analyse only this central share of each vowel
    central_fraction: float = 1.0

    def __post_init__(self):
        if not 2 <= self.max_formants <= 7:
            raise ValueError("max_formants must lie in [2, 7]")
        if self.ceiling_hz <= 2 * MIN_FORMANT_HZ:
            raise ValueError("ceiling_hz too low")
        if self.window_length_s <= 0 or self.time_step_s <= 0:
            raise ValueError("window_length_s and time_step_s must be positive")
        if not 0 < self.pre_emphasis_from_hz < self.ceiling_hz:
            raise ValueError("pre_emphasis_from_hz must lie in (0, ceiling_hz)")
        if not 0 < self.central_fraction <= 1:
            raise ValueError("central_fraction must lie in (0, 1]")

    @property
    def analysis_rate(self) -> int:
        return int(round(2 * self.ceiling_hz))

    @property
    def lpc_order(self) -> int:
        return 2 * self.max_formants

    @classmethod
    def from_json(cls, doc: dict) -> "FormantConfig":
        known = {k: doc[k] for k in cls.__dataclass_fields__ if k in doc}
        return cls(**known)

    @classmethod
    def load(cls, path: str | Path) -> "FormantConfig":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def gaussian_window(n: int) -> np.ndarray:
    """Gaussian taper reaching exactly zero one sample beyond each end."""
    edge = math.exp(-12.0)
    i = np.arange(1, n + 1)
    mid = 0.5 * (n + 1)
    w = np.exp(-48.0 * (i - mid) ** 2 / (n + 1) ** 2)
    return (w - edge) / (1.0 - edge)


def lpc_burg(frame: Sequence[float], order: int) -> np.ndarray:
    """Prediction polynomial ``[1, a1, ..., a_order]`` by Burg's method.

    Each stage picks the reflection coefficient that minimises the summed
    forward and backward error energy, so every coefficient has magnitude
    at most one and the synthesis filter is minimum phase.
    """
    x = np.asarray(frame, dtype=np.float64)
    if order < 1:
        raise ValueError("order must be >= 1")
    if len(x) <= order:
        raise ValueError(f"frame of {len(x)} samples is too short for order {order}")
    if not np.any(x) or np.ptp(x) == 0:
        raise DegenerateFrame("frame is all zero or constant")
    a = np.zeros(order + 1)
    a[0] = 1.0
    f = x[1:].copy()
    b = x[:-1].copy()
    tiny = np.dot(x, x) * 1e-300
    for k in range(1, order + 1):
        den = np.dot(f, f) + np.dot(b, b)
        if den <= tiny:
            break
        refl = -2.0 * np.dot(f, b) / den
        prev = a[: k + 1].copy()
        a[: k + 1] = prev + refl * prev[::-1]
        f, b = (f + refl * b)[1:], (b + refl * f)[:-1]
        if len(f) == 0:
            break
    return a


def _polish(coeffs: np.ndarray, roots: np.ndarray, iterations: int = 8) -> np.ndarray:
    """Newton refinement of all roots at once; a root keeps a step only if it
    lowers |p(z)|, and stops moving after its first rejected step."""
    z = roots.astype(complex)
    dcoeffs = np.polyder(coeffs)
    best = np.abs(np.polyval(coeffs, z))
    active = np.ones(len(z), dtype=bool)
    for _ in range(iterations):
        if not active.any():
            break
        dp = np.polyval(dcoeffs, z)
        ok = active & (dp != 0)
        step = np.zeros_like(z)
        step[ok] = np.polyval(coeffs, z[ok]) / dp[ok]
        z_new = z - step
        val = np.abs(np.polyval(coeffs, z_new))
        better = ok & (val < best)
        z = np.where(better, z_new, z)
        best = np.where(better, val, best)
        active = better
    return z


def lpc_roots(coeffs: Sequence[float]) -> np.ndarray:
    """Roots of ``z^p + a1 z^(p-1) + ... + ap`` via companion-matrix eigenvalues."""
    a = np.asarray(coeffs, dtype=np.float64)
    p = len(a) - 1
    if p < 1:
        return np.array([], dtype=complex)
    companion = np.zeros((p, p))
    companion[0, :] = -a[1:] / a[0]
    companion[1:, :-1] = np.eye(p - 1)
    try:
        roots = np.linalg.eigvals(companion)
    except np.linalg.LinAlgError as e:
        raise RootFindingFailure(str(e)) from None
    if not np.all(np.isfinite(roots)):
        raise RootFindingFailure("eigenvalue iteration produced non-finite roots")
    roots = _polish(a, roots)
    # reflect anything outside the unit circle; frequency is unchanged
    r = np.abs(roots)
    outside = r > 1.0
    roots[outside] = 1.0 / np.conj(roots[outside])
    return roots


def formants_from_lpc(
    coeffs: Sequence[float], sample_rate: float, ceiling_hz: float | None = None
) -> list[tuple[float, float]]:
    """(frequency, bandwidth) pairs from the prediction polynomial's roots.

    A root ``r e^{i theta}`` gives ``f = theta fs / 2 pi`` and
    ``bw = -ln(r) fs / pi``.  Kept: upper half plane, 50 Hz < f <
    ceiling - 50 Hz, bandwidth under 400 Hz.  Ascending in frequency.
    """
    ceiling = sample_rate / 2 if ceiling_hz is None else ceiling_hz
    out = []
    for z in lpc_roots(coeffs):
        if z.imag <= 0:
            continue
        r = abs(z)
        if r == 0:
            continue
        freq = math.atan2(z.imag, z.real) * sample_rate / (2 * math.pi)
        bw = -math.log(r) * sample_rate / math.pi
        if MIN_FORMANT_HZ < freq < ceiling - MIN_FORMANT_HZ and bw < MAX_BANDWIDTH_HZ:
            out.append((freq, bw))
    out.sort()
    return out


@dataclass(frozen=True)
class VowelToken:
    vowel: str
    f1_hz: float
    f2_hz: float
    interval: Interval
    file: str = ""
    model: str = ""
    n_frames: int = 0


def frame_times(t0: float, t1: float, window: float, step: float) -> np.ndarray:
    """Frame centres on a ``step`` grid, symmetric in [t0, t1], each at least
    ``window / 2`` from both ends."""
    span = t1 - t0
    if span < window - 1e-12:
        return np.empty(0)
    n = int(math.floor((span - window) / step + 1e-9)) + 1
    mid = 0.5 * (t0 + t1)
    return mid + (np.arange(n) - 0.5 * (n - 1)) * step


def formant_track(audio: AudioBuffer, t0: float, t1: float, cfg: FormantConfig) -> list[tuple[float, list]]:
    """(frame time, formant list) for each analysis frame centred in [t0, t1].

    As in Praat, the Gaussian window physically spans twice
    ``window_length_s``; it reaches into the audio around the interval and is
    zero-padded at file edges.
    """
    times = frame_times(t0, t1, cfg.window_length_s, cfg.time_step_s)
    if len(times) == 0:
        raise TooShort(
            f"{t1 - t0:.4f} s leaves no room for a {cfg.window_length_s:.4f} s window"
        )
    reach = cfg.window_length_s + _CONTEXT_S
    c0 = max(0.0, t0 - reach)
    c1 = min(audio.duration, t1 + reach)
    seg = extract_segment(audio, c0, c1)
    seg_start = _sample_index(c0, audio.sample_rate) / audio.sample_rate
    seg = resample(seg, cfg.analysis_rate)
    seg = pre_emphasis(seg, cfg.pre_emphasis_from_hz)
    fs = seg.sample_rate
    n_win = int(round(2 * cfg.window_length_s * fs))
    pad = n_win
    x = np.concatenate([np.zeros(pad), seg.samples, np.zeros(pad)])
    window = gaussian_window(n_win)
    out = []
    for t in times:
        start = pad + int(round((t - seg_start) * fs - n_win / 2))
        frame = x[start:start + n_win]
        try:
            if np.ptp(frame) == 0:
                raise DegenerateFrame("silent frame")
            coeffs = lpc_burg(frame * window, cfg.lpc_order)
            formants = formants_from_lpc(coeffs, fs, cfg.ceiling_hz)
        except (DegenerateFrame, RootFindingFailure):
            formants = []
        out.append((float(t), formants))
    return out


def measure_vowel(
    audio: AudioBuffer,
    interval: Interval,
    cfg: FormantConfig = FormantConfig(),
    file: str = "",
    model: str = "",
) -> VowelToken:
    """Mean F1 and F2 over the frames of one vowel interval.

    The region is cut (with a little context), resampled to twice the
    ceiling, pre-emphasised and cut into Gaussian-windowed frames whose
    centres lie inside the interval.  F1 and F2 are the two lowest formants
    surviving the frequency and bandwidth filter; frames with fewer than
    two are skipped.
    """
    t0, t1 = interval.xmin, interval.xmax
    if cfg.central_fraction < 1:
        half = 0.5 * cfg.central_fraction * (t1 - t0)
        mid = 0.5 * (t0 + t1)
        t0, t1 = mid - half, mid + half
    track = formant_track(audio, t0, t1, cfg)
    f1s, f2s = [], []
    for _, formants in track:
        if len(formants) >= 2:
            f1s.append(formants[0][0])
            f2s.append(formants[1][0])
    if not f1s:
        raise NoVoicedFrames(f"no frame in [{t0}, {t1}] yielded two formants")
    return VowelToken(
        interval.text.strip(), math.fsum(f1s) / len(f1s), math.fsum(f2s) / len(f2s),
        interval, file, model, len(f1s),
    )


# ellipses


@dataclass(frozen=True)
class VowelEllipse:
    vowel: str
    model: str
    center: tuple[float, float]  # (mean F2, mean F1)
    semi_axes: tuple[float, float]  # (std F2, std F1) times the multiplier
    n: int

    @property
    def drawn(self) -> bool:
        return self.n >= 2

    def to_json(self) -> dict:
        d = asdict(self)
        d["center"] = list(self.center)
        d["semi_axes"] = list(self.semi_axes)
        return d


def exact_mean_pstd(values: Sequence[float]) -> tuple[float, float]:
    """Correctly rounded mean and population variance (then sqrt) in rationals."""
    xs = [Fraction(v) for v in values]
    n = len(xs)
    mean = sum(xs, Fraction(0)) / n
    var = sum(((x - mean) ** 2 for x in xs), Fraction(0)) / n
    return float(mean), math.sqrt(float(var))


def build_ellipses(tokens: Iterable[VowelToken], axis_multiplier: float = 1.0) -> list[VowelEllipse]:
    """One ellipse per (model, vowel), in order of first appearance.

    Semi-axes are the population standard deviations of F2 and F1 (full
    axis two standard deviations) scaled by ``axis_multiplier``.
    """
    groups: dict[tuple[str, str], list[VowelToken]] = {}
    for tok in tokens:
        groups.setdefault((tok.model, tok.vowel), []).append(tok)
    out = []
    for (model, vowel), toks in groups.items():
        m2, s2 = exact_mean_pstd([t.f2_hz for t in toks])
        m1, s1 = exact_mean_pstd([t.f1_hz for t in toks])
        if len(toks) < 2:
            s1 = s2 = 0.0
        out.append(
            VowelEllipse(vowel, model, (m2, m1), (s2 * axis_multiplier, s1 * axis_multiplier), len(toks))
        )
    return out


TOKEN_COLUMNS = ("file", "model", "vowel", "f1_hz", "f2_hz", "t_start", "t_end")
