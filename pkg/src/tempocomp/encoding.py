"""Temporal encoding of vectors and images.

Operands are streamed as zero-order-hold symbol sequences. One frame carries
one full dot product followed by ``guard_symbols`` zero symbols that give the
detector integrator a reset interval.
"""

from __future__ import annotations

import csv
import enum
import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionError, FormatError, RangeError

PREDISTORT_TOL = 1e-12


class WaveformKind(enum.IntEnum):
    OPTICAL_INTENSITY = 0  # W
    DRIVE_VOLTAGE = 1  # V
    PHOTOCURRENT = 2  # A
    VOLTAGE = 3  # V


@dataclass(frozen=True, eq=False)
class Waveform:
    """Uniformly sampled real time series tagged with its physical quantity."""

    samples: np.ndarray
    sample_rate: float
    kind: WaveformKind

    def __post_init__(self):
        s = np.array(self.samples, dtype=np.float64).reshape(-1)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)
        object.__setattr__(self, "kind", WaveformKind(self.kind))
        if not self.sample_rate > 0:
            raise RangeError(f"sample_rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(s)):
            raise RangeError("waveform samples must be finite")
        if self.kind is WaveformKind.OPTICAL_INTENSITY and s.size and s.min() < 0:
            raise RangeError("optical intensity cannot be negative")

    def __len__(self):
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.samples.size) * self.dt

    def replace(self, samples, kind=None) -> "Waveform":
        return Waveform(samples, self.sample_rate, self.kind if kind is None else kind)


@dataclass(frozen=True)
class EncodingScheme:
    symbol_rate: float = 10e9
    samples_per_symbol: int = 8
    guard_symbols: int = 4

    def __post_init__(self):
        if not self.symbol_rate > 0:
            raise RangeError("symbol_rate must be positive")
        if int(self.samples_per_symbol) != self.samples_per_symbol or self.samples_per_symbol < 1:
            raise RangeError("samples_per_symbol must be a positive integer")
        if int(self.guard_symbols) != self.guard_symbols or self.guard_symbols < 0:
            raise RangeError("guard_symbols must be a non-negative integer")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    def frame_samples(self, n: int) -> int:
        """Samples occupied by one frame carrying ``n`` symbols plus guard."""
        return (n + self.guard_symbols) * self.samples_per_symbol


@dataclass(frozen=True, eq=False)
class ImageTensor:
    """Row-major grayscale image with pixels in [0, 1].

    ``offset`` and ``scale`` record an affine rescale, so that the
    un-normalized values are ``offset + scale * pixels``.
    """

    height: int
    width: int
    pixels: np.ndarray
    offset: float = 0.0
    scale: float = 1.0

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise DimensionError(f"image dims must be positive, got {self.height}x{self.width}")
        p = np.array(self.pixels, dtype=np.float64).reshape(-1)
        if p.size != self.height * self.width:
            raise DimensionError(
                f"{p.size} pixels do not fill a {self.height}x{self.width} image")
        if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
            raise RangeError("pixels must lie in [0, 1]")
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @classmethod
    def from_array(cls, arr) -> "ImageTensor":
        a = np.asarray(arr, dtype=np.float64)
        if a.ndim != 2:
            raise DimensionError(f"expected a 2-D array, got shape {a.shape}")
        return cls(a.shape[0], a.shape[1], a)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    def to_array(self) -> np.ndarray:
        return self.pixels.reshape(self.height, self.width)

    def raw(self) -> np.ndarray:
        """Values before the recorded affine rescale."""
        return self.offset + self.scale * self.to_array()


def normalize_pixels(raw, h: int, w: int) -> ImageTensor:
    a = np.asarray(raw).reshape(-1)
    if a.size != h * w:
        raise DimensionError(f"got {a.size} pixels for a {h}x{w} image")
    if a.size and (a.min() < 0 or a.max() > 255):
        raise RangeError("raw pixels must be in 0..255")
    return ImageTensor(h, w, a.astype(np.float64) / 255.0)


def flatten_image(img: ImageTensor) -> np.ndarray:
    return np.array(img.pixels)


def _check_range(v: np.ndarray, kind: WaveformKind):
    if kind is WaveformKind.OPTICAL_INTENSITY:
        lo, hi = 0.0, 1.0
    elif kind is WaveformKind.DRIVE_VOLTAGE:
        lo, hi = -1.0, 1.0
    else:
        return
    bad = np.flatnonzero(~((v >= lo) & (v <= hi)))
    if bad.size:
        i = int(bad[0])
        raise RangeError(f"element {i} = {v[i]!r} outside [{lo}, {hi}]")


def encode_frames(rows, scheme: EncodingScheme, kind=WaveformKind.OPTICAL_INTENSITY) -> np.ndarray:
    """Encode each row as one frame; returns an (n_frames, frame_samples) array.

    Data streams (``OPTICAL_INTENSITY``) must lie in [0, 1], weight streams
    (``DRIVE_VOLTAGE``) in [-1, 1].
    """
    r = np.asarray(rows, dtype=np.float64)
    if r.ndim == 1:
        r = r[None, :]
    if r.ndim != 2:
        raise DimensionError(f"expected a matrix of frames, got shape {r.shape}")
    kind = WaveformKind(kind)
    if not np.all(np.isfinite(r)):
        raise RangeError("non-finite element in encoded vector")
    _check_range(r.reshape(-1), kind)
    padded = np.zeros((r.shape[0], r.shape[1] + scheme.guard_symbols))
    padded[:, : r.shape[1]] = r
    return np.repeat(padded, scheme.samples_per_symbol, axis=1)


def encode_vector(v, scheme: EncodingScheme, kind=WaveformKind.OPTICAL_INTENSITY) -> Waveform:
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    if v.size == 0:
        return Waveform(np.zeros(0), scheme.sample_rate, kind)
    samples = encode_frames(v, scheme, kind).reshape(-1)
    # range already enforced; the carrier kind of a data stream is its drive
    return Waveform(samples, scheme.sample_rate, kind)


def decode_vector(w: Waveform, scheme: EncodingScheme, n: int, frame_start: int = 0) -> np.ndarray:
    """Sample ``n`` symbols at their mid points, starting at ``frame_start``."""
    sps = scheme.samples_per_symbol
    idx = frame_start + np.arange(n) * sps + sps // 2
    if n and idx[-1] >= len(w):
        raise DimensionError("waveform too short for requested symbols")
    return w.samples[idx].copy()


def predistort_values(m, v_pi: float) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    if not v_pi > 0:
        raise RangeError("v_pi must be positive")
    if m.size and (m.min() < -PREDISTORT_TOL or m.max() > 1.0 + PREDISTORT_TOL
                   or not np.all(np.isfinite(m))):
        raise RangeError("pre-distortion input must lie in [0, 1]")
    return (2.0 * v_pi / math.pi) * np.arcsin(np.sqrt(np.clip(m, 0.0, 1.0)))


def predistort(m: Waveform, v_pi: float) -> Waveform:
    """Drive voltage that makes a null-biased MZM transmit exactly ``m``."""
    return Waveform(predistort_values(m.samples, v_pi), m.sample_rate,
                    WaveformKind.DRIVE_VOLTAGE)


# -- waveform dumps ---------------------------------------------------------

TCWF_MAGIC = b"TCWF"
_TCWF_HEADER = struct.Struct("<4sId")


def write_tcwf(w: Waveform, path) -> None:
    with open(path, "wb") as fh:
        fh.write(_TCWF_HEADER.pack(TCWF_MAGIC, int(w.kind), float(w.sample_rate)))
        fh.write(w.samples.astype("<f8").tobytes())


def read_tcwf(path) -> Waveform:
    blob = Path(path).read_bytes()
    if len(blob) < _TCWF_HEADER.size:
        raise FormatError(f"{path}: truncated TCWF header")
    magic, kind, rate = _TCWF_HEADER.unpack_from(blob)
    if magic != TCWF_MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    body = blob[_TCWF_HEADER.size:]
    if len(body) % 8:
        raise FormatError(f"{path}: payload is not a whole number of f64 samples")
    try:
        kind = WaveformKind(kind)
    except ValueError:
        raise FormatError(f"{path}: unknown waveform kind {kind}") from None
    return Waveform(np.frombuffer(body, dtype="<f8"), rate, kind)


def write_waveform_csv(w: Waveform, path) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["time_s", "value"])
        for t, v in zip(w.times, w.samples):
            out.writerow([repr(float(t)), repr(float(v))])


def read_waveform_csv(path, kind=WaveformKind.VOLTAGE) -> Waveform:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != ["time_s", "value"]:
        raise FormatError(f"{path}: expected header time_s,value")
    try:
        t = np.array([float(r[0]) for r in rows[1:]])
        v = np.array([float(r[1]) for r in rows[1:]])
    except (ValueError, IndexError) as exc:
        raise FormatError(f"{path}: {exc}") from None
    if t.size < 2:
        raise FormatError(f"{path}: need at least two samples to recover the rate")
    return Waveform(v, 1.0 / (t[1] - t[0]), kind)
