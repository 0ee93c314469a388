"""WAV input and the signal conditioning used ahead of formant analysis."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np

from .errors import NotRiff, OutOfRange, TruncatedFile, UnsupportedCodec
from .textgrid import decimal_seconds

WAVE_FORMAT_PCM = 0x0001
WAVE_FORMAT_IEEE_FLOAT = 0x0003
WAVE_FORMAT_EXTENSIBLE = 0xFFFE


@dataclass(frozen=True, eq=False)
class AudioBuffer:
    sample_rate: int
    samples: np.ndarray

    def __post_init__(self):
        if int(self.sample_rate) != self.sample_rate or self.sample_rate <= 0:
            raise ValueError(f"sample_rate must be a positive integer, got {self.sample_rate}")
        x = np.array(self.samples, dtype=np.float64)
        if x.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise ValueError("samples contain NaN or Inf")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self):
        return len(self.samples)

    @property
    def duration(self) -> float:
        return len(self.samples) / self.sample_rate


@dataclass(frozen=True)
class WavInfo:
    sample_rate: int
    channels: int
    format_tag: int
    bits: int
    n_frames: int
    data_offset: int

    @property
    def duration(self) -> float:
        return self.n_frames / self.sample_rate


def _scan_header(head: bytes, total_size: int) -> WavInfo:
    """Walk RIFF chunks up to the data chunk.

    ``head`` must hold at least everything before the sample data;
    ``total_size`` is the full byte length of the file.
    """
    if len(head) < 12 or head[:4] != b"RIFF" or head[8:12] != b"WAVE":
        raise NotRiff("not a RIFF/WAVE file")
    pos = 12
    fmt = None
    while True:
        if pos + 8 > len(head):
            raise TruncatedFile("no data chunk before end of file")
        cid = head[pos:pos + 4]
        (size,) = struct.unpack_from("<I", head, pos + 4)
        body = pos + 8
        if cid == b"fmt ":
            if size < 16 or body + size > len(head):
                raise TruncatedFile("fmt chunk is truncated")
            tag, channels, rate, _byte_rate, block_align, bits = struct.unpack_from(
                "<HHIIHH", head, body
            )
            if tag == WAVE_FORMAT_EXTENSIBLE:
                if size < 40:
                    raise TruncatedFile("extensible fmt chunk is truncated")
                (tag,) = struct.unpack_from("<H", head, body + 24)
            fmt = (tag, channels, rate, block_align, bits)
        elif cid == b"data":
            if fmt is None:
                raise TruncatedFile("data chunk precedes fmt chunk")
            tag, channels, rate, block_align, bits = fmt
            if (tag, bits) not in ((WAVE_FORMAT_PCM, 16), (WAVE_FORMAT_IEEE_FLOAT, 32)):
                raise UnsupportedCodec(f"format tag {tag:#06x} with {bits}-bit samples")
            if channels not in (1, 2):
                raise UnsupportedCodec(f"{channels} channels")
            if rate <= 0:
                raise UnsupportedCodec("sample rate is zero")
            frame_bytes = channels * bits // 8
            if body + size > total_size:
                raise TruncatedFile(
                    f"data chunk declares {size} bytes, {total_size - body} present"
                )
            if size % frame_bytes:
                raise TruncatedFile("data chunk ends inside a sample frame")
            return WavInfo(rate, channels, tag, bits, size // frame_bytes, body)
        pos = body + size + (size & 1)


def read_wav(source: bytes | str | Path) -> AudioBuffer:
    """Decode PCM16 or float32 WAV into a mono buffer in [-1, 1].

    Stereo is averaged.  PCM is scaled by 1/32768.
    """
    if isinstance(source, (str, Path)):
        source = Path(source).read_bytes()
    data = bytes(source)
    info = _scan_header(data, len(data))
    n = info.n_frames * info.channels
    if info.format_tag == WAVE_FORMAT_PCM:
        x = np.frombuffer(data, dtype="<i2", count=n, offset=info.data_offset) / 32768.0
    else:
        x = np.frombuffer(data, dtype="<f4", count=n, offset=info.data_offset).astype(np.float64)
    if info.channels == 2:
        x = x.reshape(-1, 2).mean(axis=1)
    return AudioBuffer(info.sample_rate, x)


def wav_info(path: str | Path) -> WavInfo:
    """Header-only inspection; does not load sample data."""
    path = Path(path)
    total = path.stat().st_size
    with path.open("rb") as f:
        head = f.read(65536)
    return _scan_header(head, total)


def encode_wav(samples, sample_rate: int, fmt: str = "pcm16") -> bytes:
    """Encode an ``(n,)`` or ``(n, channels)`` float array as WAV bytes."""
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    channels = x.shape[1]
    if fmt == "pcm16":
        payload = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2").tobytes()
        tag, bits = WAVE_FORMAT_PCM, 16
    elif fmt == "float32":
        payload = x.astype("<f4").tobytes()
        tag, bits = WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ValueError(f"unknown WAV format {fmt!r}")
    block = channels * bits // 8
    fmt_chunk = struct.pack(
        "<4sIHHIIHH", b"fmt ", 16, tag, channels, sample_rate, sample_rate * block, block, bits
    )
    data_chunk = struct.pack("<4sI", b"data", len(payload)) + payload
    if len(payload) & 1:
        data_chunk += b"\0"
    body = b"WAVE" + fmt_chunk + data_chunk
    return struct.pack("<4sI", b"RIFF", len(body)) + body


def write_wav(path: str | Path, samples, sample_rate: int, fmt: str = "pcm16") -> None:
    Path(path).write_bytes(encode_wav(samples, sample_rate, fmt))


# resampling

_KAISER_BETA = 8.6  # ~86 dB sidelobe rejection
_ZERO_CROSSINGS = 48
_ROLLOFF = 0.94
_CHUNK = 4096
_MAX_PHASES = 4096


def _kernel(d: np.ndarray, fc: float, half_width: float) -> np.ndarray:
    inside = np.abs(d) <= half_width
    u = np.where(inside, d / half_width, 0.0)
    win = np.i0(_KAISER_BETA * np.sqrt(1.0 - u * u)) / np.i0(_KAISER_BETA)
    return 2.0 * fc * np.sinc(2.0 * fc * d) * win * inside


@lru_cache(maxsize=16)
def _phase_table(src: int, target: int) -> tuple[np.ndarray, int, int, int]:
    """Kernel taps for every output phase of the rational ratio target/src."""
    g = math.gcd(src, target)
    up, down = target // g, src // g
    fc = _ROLLOFF * min(src, target) / (2.0 * src)
    half_width = _ZERO_CROSSINGS / (2.0 * fc)
    k = int(math.ceil(half_width))
    offsets = np.arange(-k + 1, k + 1)
    table = _kernel(np.arange(up)[:, None] / up - offsets[None, :], fc, half_width)
    table.setflags(write=False)
    return table, up, down, k


def resample(buf: AudioBuffer, target_rate: int) -> AudioBuffer:
    """Band-limited resampling by Kaiser-windowed sinc interpolation.

    The low-pass cutoff sits at 94% of the lower of the two Nyquist
    frequencies; the kernel spans 48 zero crossings on each side.  The
    output has ``round(n * target / source)`` samples.  Output positions
    are computed in integer arithmetic, and the taps for each of the
    ratio's phases are built once per rate pair.
    """
    if target_rate <= 0:
        raise ValueError(f"target_rate must be positive, got {target_rate}")
    src = buf.sample_rate
    target_rate = int(target_rate)
    if target_rate == src:
        return buf
    x = buf.samples
    n_in = len(x)
    n_out = int(round(n_in * target_rate / src))
    if n_in == 0 or n_out == 0:
        return AudioBuffer(target_rate, np.zeros(n_out))

    g = math.gcd(src, target_rate)
    up = target_rate // g
    if up <= _MAX_PHASES:
        table, up, down, k = _phase_table(src, target_rate)
    else:
        table = None
        down = src // g
        fc = _ROLLOFF * min(src, target_rate) / (2.0 * src)
        half_width = _ZERO_CROSSINGS / (2.0 * fc)
        k = int(math.ceil(half_width))
    offsets = np.arange(-k + 1, k + 1)
    padded = np.concatenate([np.zeros(k), x, np.zeros(k + 1)])

    out = np.empty(n_out)
    for start in range(0, n_out, _CHUNK):
        m = np.arange(start, min(start + _CHUNK, n_out), dtype=np.int64)
        base, phase = np.divmod(m * down, up)
        idx = base[:, None] + offsets[None, :]
        if table is not None:
            h = table[phase]
        else:
            h = _kernel(phase[:, None] / up - offsets[None, :], fc, half_width)
        out[start:start + len(m)] = np.einsum("ij,ij->i", h, padded[idx + k])
    return AudioBuffer(target_rate, out)


def pre_emphasis(buf: AudioBuffer, from_hz: float) -> AudioBuffer:
    """First-order high-pass ``y[n] = x[n] - a x[n-1]``, ``a = exp(-2 pi F / fs)``."""
    nyquist = buf.sample_rate / 2
    if not (0 < from_hz < nyquist):
        raise ValueError(f"from_hz must lie in (0, {nyquist}), got {from_hz}")
    a = math.exp(-2.0 * math.pi * from_hz / buf.sample_rate)
    x = buf.samples
    y = x.copy()
    y[1:] -= a * x[:-1]
    return AudioBuffer(buf.sample_rate, y)


def pre_emphasis_coefficient(from_hz: float, sample_rate: float) -> float:
    return math.exp(-2.0 * math.pi * from_hz / sample_rate)


def _sample_index(t: float, rate: int) -> int:
    # round half up, in exact decimal so 0.6 s * 10 kHz lands on 6000
    return int(math.floor(decimal_seconds(t) * rate + decimal_seconds(0.5)))


def extract_segment(buf: AudioBuffer, t0: float, t1: float) -> AudioBuffer:
    """Samples ``round(t0 * fs)`` up to (excluding) ``round(t1 * fs)``."""
    if not (0 <= t0 < t1) or t1 > buf.duration + 1e-9:
        raise OutOfRange(f"segment [{t0}, {t1}] outside [0, {buf.duration}]")
    i0 = _sample_index(t0, buf.sample_rate)
    i1 = min(_sample_index(t1, buf.sample_rate), len(buf.samples))
    return AudioBuffer(buf.sample_rate, buf.samples[i0:i1])


def frame_signal(x: np.ndarray, frame_len: int, hop: int, start: int = 0) -> np.ndarray:
    """Stack of overlapping frames ``x[start + j*hop : start + j*hop + frame_len]``.

    Only frames that fit entirely inside ``x`` are returned.
    """
    x = np.asarray(x)
    if frame_len <= 0 or hop <= 0:
        raise ValueError("frame_len and hop must be positive")
    avail = len(x) - start - frame_len
    if avail < 0:
        return np.empty((0, frame_len))
    n = avail // hop + 1
    idx = start + np.arange(n)[:, None] * hop + np.arange(frame_len)[None, :]
    return x[idx]
