"""Simulator of a time-domain photonic weighted-summation unit and the neural
networks built on it."""

from .devices import Bias, Fidelity, IntegratorMode
from .encoding import EncodingScheme, ImageTensor, Waveform, WaveformKind
from .engine import (CalibrationResult, EngineConfig, batched_weighted_sum, calibrate_gain,
                     find_sync_offset, weighted_sum)
from .errors import (CalibrationError, ConfigurationError, DataError, DimensionError,
                     FormatError, NumericError, RangeError, TempocompError)
from .nn import ConvSpec, DetectionSpec, Engine, FcSpec
from .oracle import conv2d_digital, detect_digital, dot_digital, fc_digital
from .wdm import ChannelPlan, execute_plan, plan_matmul, throughput_estimate

__version__ = "0.1.0"
