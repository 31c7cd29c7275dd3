"""Intensity-domain device models: laser, MZMs, coupler, VOA, BPD and integrator.

All transfer functions are per-sample and pure. Noise enters only through
explicit phase arrays (bias drift) or an explicit generator (detector noise).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .encoding import Waveform, WaveformKind
from .errors import ConfigurationError, DimensionError, RangeError


class Bias(enum.Enum):
    NULL_POINT = "null"
    QUADRATURE_POINT = "quadrature"


class Fidelity(enum.Enum):
    LINEARIZED = "linearized"
    PHYSICAL = "physical"


class IntegratorMode(enum.Enum):
    IDEAL_GATED = "ideal_gated"
    LEAKY_RC = "leaky_rc"


@dataclass(frozen=True)
class LaserParams:
    intensity_in: float = 1e-3  # W
    wavelength: float = 1550e-9  # m

    def __post_init__(self):
        if not (self.intensity_in > 0 and self.wavelength > 0):
            raise RangeError("laser intensity and wavelength must be positive")


@dataclass(frozen=True)
class MzmParams:
    v_pi: float = 3.5
    bias: Bias = Bias.NULL_POINT
    bias_error: float = 0.0  # rad, static offset from the ideal bias phase

    def __post_init__(self):
        if not self.v_pi > 0:
            raise RangeError("v_pi must be positive")
        object.__setattr__(self, "bias", Bias(self.bias))


@dataclass(frozen=True)
class VoaParams:
    alpha: float = 0.5

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise RangeError(f"VOA alpha must be in [0, 1], got {self.alpha}")


@dataclass(frozen=True)
class BpdParams:
    responsivity: float = 1.0  # A/W
    parasitic_resistance: float = 1e4  # ohm
    bandwidth: float = 150e6  # Hz
    integrator_mode: IntegratorMode = IntegratorMode.IDEAL_GATED

    def __post_init__(self):
        if not (self.responsivity > 0 and self.parasitic_resistance > 0 and self.bandwidth > 0):
            raise RangeError("BPD responsivity, resistance and bandwidth must be positive")
        object.__setattr__(self, "integrator_mode", IntegratorMode(self.integrator_mode))

    @property
    def tau(self) -> float:
        """RC time constant fixed by the detector bandwidth."""
        return 1.0 / (2.0 * math.pi * self.bandwidth)

    @property
    def capacitance(self) -> float:
        return self.tau / self.parasitic_resistance


@dataclass(frozen=True)
class NoiseModel:
    bias_drift_std: float = 0.0  # rad per sqrt(symbol)
    detector_noise_std: float = 0.0  # A, per sample
    sync_jitter_std: float = 0.0  # samples, per frame
    rng_seed: int = 0

    def __post_init__(self):
        if min(self.bias_drift_std, self.detector_noise_std, self.sync_jitter_std) < 0:
            raise RangeError("noise standard deviations must be non-negative")
        if not 0 <= int(self.rng_seed) < 2**64:
            raise RangeError("rng_seed must fit in an unsigned 64-bit integer")

    @property
    def enabled(self) -> bool:
        return bool(self.bias_drift_std or self.detector_noise_std or self.sync_jitter_std)

    def disabled(self) -> "NoiseModel":
        return replace(self, bias_drift_std=0.0, detector_noise_std=0.0, sync_jitter_std=0.0)

    def rng(self, *key: int) -> np.random.Generator:
        """Independent generator for the substream identified by ``key``."""
        ss = np.random.SeedSequence(int(self.rng_seed), spawn_key=tuple(int(k) for k in key))
        return np.random.default_rng(ss)


# -- transfer functions ------------------------------------------------------

def _intensity(samples, like: Waveform) -> Waveform:
    return Waveform(samples, like.sample_rate, WaveformKind.OPTICAL_INTENSITY)


def _require(w: Waveform, kind: WaveformKind, name: str):
    if w.kind is not kind:
        raise ConfigurationError(f"{name} must be a {kind.name} waveform, got {w.kind.name}")


def _phase(bias_phase, n: int):
    if bias_phase is None:
        return 0.0
    p = np.asarray(bias_phase, dtype=np.float64)
    if p.ndim and p.size != n:
        raise DimensionError("bias phase array must match the waveform length")
    return p


def mzm_data_modulate(i_in: float, drive: Waveform, mzm: MzmParams, bias_phase=None) -> Waveform:
    """Null-biased MZM: ``i_in * sin^2(pi*V/(2*v_pi) + phase/2)``.

    ``bias_phase`` adds a per-sample drift to the static ``bias_error``.
    """
    if mzm.bias is not Bias.NULL_POINT:
        raise ConfigurationError("data modulator must be biased at the null point")
    _require(drive, WaveformKind.DRIVE_VOLTAGE, "drive")
    phase = mzm.bias_error + _phase(bias_phase, len(drive))
    arg = math.pi * drive.samples / (2.0 * mzm.v_pi) + 0.5 * phase
    return _intensity(i_in * np.sin(arg) ** 2, drive)


def split_3db(w: Waveform) -> tuple[Waveform, Waveform]:
    half = _intensity(0.5 * w.samples, w)
    return half, half


def weight_drive(w, mzm: MzmParams, fidelity: Fidelity, predistort: bool = True) -> np.ndarray:
    """Drive voltages realizing normalized weights ``w`` in [-1, 1].

    In physical mode with ``predistort`` the arcsine of the weight is applied
    so the sine transfer reproduces the weight exactly.
    """
    w = np.asarray(w, dtype=np.float64)
    if Fidelity(fidelity) is Fidelity.PHYSICAL and predistort:
        return (mzm.v_pi / math.pi) * np.arcsin(np.clip(w, -1.0, 1.0))
    return (mzm.v_pi / math.pi) * w


def mzm_weight_modulate(i: Waveform, w_drive: Waveform, mzm: MzmParams,
                        fidelity: Fidelity = Fidelity.LINEARIZED, bias_phase=None) -> Waveform:
    """Quadrature-biased MZM acting on the (already split) upper-path intensity.

    Linearized: ``(i/2) * (1 + x + phase)``, with ``x = pi*V/v_pi``; the bracket
    is the first-order expansion of the physical ``1 + sin(x + phase)`` and is
    clipped to the passive range [0, 2] when a drift phase pushes it out.
    """
    if mzm.bias is not Bias.QUADRATURE_POINT:
        raise ConfigurationError("weight modulator must be biased at quadrature")
    _require(i, WaveformKind.OPTICAL_INTENSITY, "input")
    _require(w_drive, WaveformKind.DRIVE_VOLTAGE, "w_drive")
    if len(i) != len(w_drive):
        raise DimensionError("intensity and drive waveforms differ in length")
    x = math.pi * w_drive.samples / mzm.v_pi
    phase = mzm.bias_error + _phase(bias_phase, len(i))
    if Fidelity(fidelity) is Fidelity.LINEARIZED:
        over = np.flatnonzero(np.abs(x) > 1.0 + 1e-12)
        if over.size:
            raise RangeError(
                f"linearized weight drive out of range at sample {int(over[0])}: "
                f"|pi*V/v_pi| = {abs(x[over[0]]):.6g} > 1")
        bracket = np.clip(1.0 + x + phase, 0.0, 2.0)
    else:
        bracket = 1.0 + np.sin(x + phase)
    return _intensity(0.5 * i.samples * bracket, i)


def voa_attenuate(i: Waveform, voa: VoaParams) -> Waveform:
    return _intensity(voa.alpha * i.samples, i)


def bpd_differential(upper: Waveform, lower: Waveform, bpd: BpdParams,
                     noise: NoiseModel | None = None,
                     rng: np.random.Generator | None = None) -> Waveform:
    """Differential photocurrent of the balanced detector, plus white noise."""
    if len(upper) != len(lower) or upper.sample_rate != lower.sample_rate:
        raise DimensionError("BPD inputs differ in length or sample rate")
    current = bpd.responsivity * (upper.samples - lower.samples)
    if noise is not None and noise.detector_noise_std > 0:
        rng = noise.rng() if rng is None else rng
        current = current + rng.normal(0.0, noise.detector_noise_std, current.size)
    return Waveform(current, upper.sample_rate, WaveformKind.PHOTOCURRENT)


# -- integration --------------------------------------------------------------

def leaky_weights(n: int, dt: float, bpd: BpdParams) -> np.ndarray:
    """Per-sample weights mapping a current sequence to the end-of-window RC voltage.

    Exact solution of ``dV/dt = (R*i - V)/tau`` for piecewise-constant current.
    """
    a = math.exp(-dt / bpd.tau)
    return bpd.parasitic_resistance * (1.0 - a) * a ** np.arange(n - 1, -1, -1, dtype=np.float64)


def integrate_frames(currents: np.ndarray, dt: float, bpd: BpdParams) -> np.ndarray:
    """End-of-window voltage for each row of ``currents``; state reset per row."""
    currents = np.atleast_2d(currents)
    if bpd.integrator_mode is IntegratorMode.IDEAL_GATED:
        return currents.sum(axis=1) * dt / bpd.capacitance
    return currents @ leaky_weights(currents.shape[1], dt, bpd)


def integrate_frame(i: Waveform, frame_start: int, frame_len: int, bpd: BpdParams) -> float:
    if frame_start < 0 or frame_len < 0 or frame_start + frame_len > len(i):
        raise DimensionError(
            f"window [{frame_start}, {frame_start + frame_len}) outside waveform of {len(i)}")
    window = i.samples[frame_start:frame_start + frame_len]
    return float(integrate_frames(window[None, :], i.dt, bpd)[0])


def apply_bias_drift(noise: NoiseModel, n_symbols: int,
                     rng: np.random.Generator | None = None) -> np.ndarray:
    """Random-walk bias phase, one value per symbol, starting at zero."""
    if n_symbols < 0:
        raise RangeError("n_symbols must be non-negative")
    if n_symbols == 0:
        return np.zeros(0)
    if noise.bias_drift_std == 0:
        return np.zeros(n_symbols)
    rng = noise.rng() if rng is None else rng
    steps = rng.normal(0.0, noise.bias_drift_std, n_symbols - 1)
    return np.concatenate(([0.0], np.cumsum(steps)))
