"""Weighted-summation engine: data MZM -> 3 dB split -> weight MZM / VOA -> BPD -> integrator.

Every dot product occupies one frame. Frames are simulated as rows of a
(frames x samples) array, each with its own RNG substream keyed by
``(channel, *stream, frame)``, so results do not depend on evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from . import devices as dev
from .devices import (Bias, BpdParams, Fidelity, IntegratorMode, LaserParams, MzmParams,
                      NoiseModel, VoaParams)
from .encoding import EncodingScheme, Waveform, WaveformKind, encode_frames, predistort_values
from .errors import CalibrationError, ConfigurationError, DimensionError

# Fitted noise defaults; the bias drift is what separates photonic from digital
# accuracy on MNIST, detector noise stays small enough for clean edge maps.
DEFAULT_BIAS_DRIFT_STD = 7e-4
DEFAULT_DETECTOR_NOISE_FRACTION = 0.002

GAIN_PILOT_LENGTH = 16
SYNC_PILOT_LENGTH = 64
SYNC_PILOT_SEED = 20240229


def default_noise(laser: LaserParams | None = None, bpd: BpdParams | None = None,
                  rng_seed: int = 0) -> NoiseModel:
    """Default fitted noise; detector noise is 0.2% of the full-scale current."""
    laser = laser or LaserParams()
    bpd = bpd or BpdParams()
    full_scale = bpd.responsivity * laser.intensity_in / 4.0
    return NoiseModel(bias_drift_std=DEFAULT_BIAS_DRIFT_STD,
                      detector_noise_std=DEFAULT_DETECTOR_NOISE_FRACTION * full_scale,
                      sync_jitter_std=0.0, rng_seed=rng_seed)


@dataclass(frozen=True)
class EngineConfig:
    laser: LaserParams = field(default_factory=LaserParams)
    mzm_data: MzmParams = field(default_factory=lambda: MzmParams(bias=Bias.NULL_POINT))
    mzm_weight: MzmParams = field(default_factory=lambda: MzmParams(bias=Bias.QUADRATURE_POINT))
    voa: VoaParams = field(default_factory=VoaParams)
    bpd: BpdParams = field(default_factory=BpdParams)
    scheme: EncodingScheme = field(default_factory=EncodingScheme)
    noise: NoiseModel = field(default_factory=default_noise)
    fidelity: Fidelity = Fidelity.LINEARIZED
    sync_offset: int = 0  # samples the weight stream lags the data stream
    weight_predistort: bool = True

    def __post_init__(self):
        object.__setattr__(self, "fidelity", Fidelity(self.fidelity))
        if self.mzm_data.bias is not Bias.NULL_POINT:
            raise ConfigurationError("data MZM must be biased at the null point")
        if self.mzm_weight.bias is not Bias.QUADRATURE_POINT:
            raise ConfigurationError("weight MZM must be biased at quadrature")
        if int(self.sync_offset) != self.sync_offset:
            raise ConfigurationError("sync_offset must be an integer number of samples")
        if (self.bpd.integrator_mode is IntegratorMode.LEAKY_RC
                and self.scheme.guard_symbols < 1):
            raise ConfigurationError("leaky integration needs at least one guard symbol")

    def noiseless(self) -> "EngineConfig":
        return replace(self, noise=self.noise.disabled())


@dataclass(frozen=True)
class CalibrationResult:
    gain: float  # volts per unit dot product
    residual_offset: float = 0.0  # volts
    found_sync_offset: int = 0  # samples

    def __post_init__(self):
        if not self.gain > 0 or not math.isfinite(self.gain):
            raise CalibrationError(f"gain must be positive and finite, got {self.gain}")


@dataclass(frozen=True)
class Trace:
    """Intermediate waveforms of one simulated stream, for dumps and plots."""

    data_drive: Waveform
    weight_drive: Waveform
    mzm1: Waveform
    upper: Waveform
    lower: Waveform
    current: Waveform
    voltage: Waveform
    frame_voltages: np.ndarray


def _shift(rows: np.ndarray, shift: int) -> np.ndarray:
    """Delay a stream (given frame-by-frame) by ``shift`` samples, zero-filled."""
    flat = rows.reshape(-1)
    out = np.zeros_like(flat)
    if abs(shift) >= flat.size:
        return out.reshape(rows.shape)
    if shift >= 0:
        out[shift:] = flat[: flat.size - shift]
    else:
        out[:shift] = flat[-shift:]
    return out.reshape(rows.shape)


def _symbols_to_samples(per_symbol: np.ndarray, sps: int) -> np.ndarray:
    return np.repeat(per_symbol, sps, axis=1)


def _check_operands(data, weights):
    d = np.atleast_2d(np.asarray(data, dtype=np.float64))
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if d.shape != w.shape:
        raise DimensionError(f"data {d.shape} and weights {w.shape} differ in shape")
    return d, w


def simulate(data, weights, cfg: EngineConfig, compensation: int = 0,
             channel: int = 0, stream=(), trace: bool = False):
    """Run one stream of frames; row ``f`` of ``data``/``weights`` is frame ``f``.

    ``compensation`` delays the data stream to re-align it with a weight
    stream lagging by ``cfg.sync_offset``. Returns raw end-of-frame voltages,
    or a :class:`Trace` when ``trace`` is set.
    """
    d, w = _check_operands(data, weights)
    n_frames, n = d.shape
    scheme, noise = cfg.scheme, cfg.noise
    sps = scheme.samples_per_symbol
    n_sym = n + scheme.guard_symbols
    frame_len = n_sym * sps

    m_rows = encode_frames(d, scheme, WaveformKind.OPTICAL_INTENSITY)
    w_rows = encode_frames(w, scheme, WaveformKind.DRIVE_VOLTAGE)

    drift_d = np.zeros((n_frames, n_sym))
    drift_w = np.zeros((n_frames, n_sym))
    det = np.zeros((n_frames, frame_len))
    jitter = np.zeros(n_frames, dtype=np.int64)
    if noise.enabled:
        for f in range(n_frames):
            rng = noise.rng(channel, *stream, f)
            if noise.bias_drift_std > 0:
                drift_d[f] = dev.apply_bias_drift(noise, n_sym, rng)
                drift_w[f] = dev.apply_bias_drift(noise, n_sym, rng)
            if noise.detector_noise_std > 0:
                det[f] = rng.normal(0.0, noise.detector_noise_std, frame_len)
            if noise.sync_jitter_std > 0:
                jitter[f] = int(np.rint(rng.normal(0.0, noise.sync_jitter_std)))

    base_shift = int(cfg.sync_offset)
    w_aligned = _shift(w_rows, base_shift)
    m_aligned = _shift(m_rows, int(compensation))
    for j in np.unique(jitter[jitter != 0]):
        sel = jitter == j
        w_aligned[sel] = _shift(w_rows, base_shift + int(j))[sel]

    rate = scheme.sample_rate
    flat = lambda a: a.reshape(-1)
    drive_m = Waveform(predistort_values(flat(m_aligned), cfg.mzm_data.v_pi), rate,
                       WaveformKind.DRIVE_VOLTAGE)
    drive_w = Waveform(dev.weight_drive(flat(w_aligned), cfg.mzm_weight, cfg.fidelity,
                                        cfg.weight_predistort), rate,
                       WaveformKind.DRIVE_VOLTAGE)

    phase_d = flat(_symbols_to_samples(drift_d, sps)) if noise.bias_drift_std > 0 else None
    phase_w = flat(_symbols_to_samples(drift_w, sps)) if noise.bias_drift_std > 0 else None

    mzm1 = dev.mzm_data_modulate(cfg.laser.intensity_in, drive_m, cfg.mzm_data, phase_d)
    up_in, low_in = dev.split_3db(mzm1)
    upper = dev.mzm_weight_modulate(up_in, drive_w, cfg.mzm_weight, cfg.fidelity, phase_w)
    lower = dev.voa_attenuate(low_in, cfg.voa)
    current = dev.bpd_differential(upper, lower, cfg.bpd)
    i_rows = current.samples.reshape(n_frames, frame_len) + det
    volts = dev.integrate_frames(i_rows, 1.0 / rate, cfg.bpd)
    if not trace:
        return volts

    if cfg.bpd.integrator_mode is IntegratorMode.IDEAL_GATED:
        v_rows = np.cumsum(i_rows, axis=1) / (rate * cfg.bpd.capacitance)
    else:
        a = math.exp(-1.0 / (rate * cfg.bpd.tau))
        v_rows = lfilter([cfg.bpd.parasitic_resistance * (1 - a)], [1.0, -a], i_rows, axis=1)
    return Trace(
        data_drive=drive_m, weight_drive=drive_w, mzm1=mzm1, upper=upper, lower=lower,
        current=Waveform(flat(i_rows), rate, WaveformKind.PHOTOCURRENT),
        voltage=Waveform(flat(v_rows), rate, WaveformKind.VOLTAGE),
        frame_voltages=volts)


def _apply_calibration(volts, cal: CalibrationResult):
    return (np.asarray(volts) - cal.residual_offset) / cal.gain


def weighted_sum(data, weights, cfg: EngineConfig, cal: CalibrationResult,
                 channel: int = 0, stream=()) -> float:
    d = np.asarray(data, dtype=np.float64).reshape(-1)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if d.size != w.size:
        raise DimensionError(f"data length {d.size} != weights length {w.size}")
    v = simulate(d, w, cfg, cal.found_sync_offset, channel, stream)
    return float(_apply_calibration(v, cal)[0])


def frame_sums(data_rows, weight_rows, cfg: EngineConfig, cal: CalibrationResult,
               channel: int = 0, stream=()) -> np.ndarray:
    """Calibrated result of each (data row, weight row) frame, paired row by row."""
    v = simulate(data_rows, weight_rows, cfg, cal.found_sync_offset, channel, stream)
    return _apply_calibration(v, cal)


def batched_weighted_sum(data, weights, cfg: EngineConfig, cal: CalibrationResult,
                         channel: int = 0, stream=()) -> np.ndarray:
    """M x L matrix of dot products, frames streamed data-row-major on one channel."""
    d = np.atleast_2d(np.asarray(data, dtype=np.float64))
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if d.ndim != 2 or w.ndim != 2 or d.shape[1] != w.shape[1]:
        raise DimensionError(f"cannot pair data {d.shape} with weights {w.shape}")
    m, l = d.shape[0], w.shape[0]
    rows_d = np.repeat(d, l, axis=0)
    rows_w = np.tile(w, (m, 1))
    return frame_sums(rows_d, rows_w, cfg, cal, channel, stream).reshape(m, l)


def sync_pilot(n: int = SYNC_PILOT_LENGTH) -> np.ndarray:
    return np.random.default_rng(SYNC_PILOT_SEED).uniform(0.0, 1.0, n)


def find_sync_offset(cfg: EngineConfig, pilot=None, true_offset_injected: int | None = None,
                     trial: int = 0) -> int:
    """Recover the weight-stream lag by sweeping the data delay over +-2 symbols.

    The pilot drives both modulators, so the frame output is the pilot's
    autocorrelation at the residual misalignment and peaks when aligned.
    """
    pilot = sync_pilot() if pilot is None else np.asarray(pilot, dtype=np.float64).reshape(-1)
    if pilot.size < 32:
        raise CalibrationError("sync pilot must span at least 32 symbols")
    if np.ptp(pilot) == 0:
        raise CalibrationError("sync pilot is constant; response curve would be flat")
    if true_offset_injected is not None:
        cfg = replace(cfg, sync_offset=int(true_offset_injected))
    span = 2 * cfg.scheme.samples_per_symbol
    candidates = np.arange(-span, span + 1)
    response = np.array([
        simulate(pilot, pilot, cfg, int(c), stream=(trial, k))[0]
        for k, c in enumerate(candidates)
    ])
    if np.ptp(response) <= 1e-12 * np.max(np.abs(response)):
        raise CalibrationError("flat offset-response curve")
    best = response.max()
    ties = candidates[response == best]
    return int(sorted(ties, key=lambda c: (abs(c), c))[0])


def calibrate_gain(cfg: EngineConfig) -> CalibrationResult:
    """Pilot-frame calibration with noise disabled.

    Aligns the streams first, then reads an all-zero frame for the residual
    offset and an all-ones frame of 16 symbols for the gain.
    """
    quiet = cfg.noiseless()
    found = find_sync_offset(quiet)
    zeros = np.zeros(GAIN_PILOT_LENGTH)
    ones = np.ones(GAIN_PILOT_LENGTH)
    offset = float(simulate(zeros, zeros, quiet, found)[0])
    v1 = float(simulate(ones, ones, quiet, found)[0])
    gain = (v1 - offset) / GAIN_PILOT_LENGTH
    if not gain > 0:
        raise CalibrationError(f"degenerate calibration gain {gain}")
    return CalibrationResult(gain=gain, residual_offset=offset, found_sync_offset=found)
