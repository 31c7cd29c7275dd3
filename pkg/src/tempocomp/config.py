"""JSON run configuration with strict keys and fully materialized defaults."""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

from .devices import BpdParams, LaserParams
from .engine import EngineConfig, default_noise
from .errors import ConfigurationError, TempocompError


def _to_plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, float) and math.isinf(obj):
        return None
    return obj


def _from_plain(base, doc, where: str):
    """Overlay ``doc`` onto the dataclass instance ``base``, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigurationError(f"{where}: expected an object")
    fields = {f.name: f for f in dataclasses.fields(base)}
    unknown = sorted(set(doc) - set(fields))
    if unknown:
        raise ConfigurationError(f"{where}: unknown key(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in doc.items():
        current = getattr(base, name)
        if dataclasses.is_dataclass(current):
            kwargs[name] = _from_plain(current, value, f"{where}.{name}")
        elif isinstance(current, enum.Enum):
            try:
                kwargs[name] = type(current)(value)
            except ValueError:
                choices = ", ".join(str(m.value) for m in type(current))
                raise ConfigurationError(f"{where}.{name}: expected one of {choices}") from None
        elif isinstance(current, float) and math.isinf(current) and value is None:
            kwargs[name] = current
        else:
            kwargs[name] = value
    try:
        return replace(base, **kwargs)
    except (TempocompError, TypeError) as exc:
        raise ConfigurationError(f"{where}: {exc}") from None


def engine_to_dict(cfg: EngineConfig) -> dict:
    return _to_plain(cfg)


def engine_from_dict(doc: dict) -> EngineConfig:
    doc = dict(doc)
    if "noise" not in doc:
        # detector noise default scales with the configured laser and detector
        laser = _from_plain(LaserParams(), doc.get("laser", {}), "engine.laser")
        bpd = _from_plain(BpdParams(), doc.get("bpd", {}), "engine.bpd")
        doc["noise"] = _to_plain(default_noise(laser, bpd))
    return _from_plain(EngineConfig(), doc, "engine")


@dataclass(frozen=True)
class RunConfig:
    engine: EngineConfig = field(default_factory=EngineConfig)
    image: str | None = None
    data_dir: str | None = None
    weights: str | None = None
    kernel: str | None = None
    detector: str | None = None
    noise: bool = True
    seed: int = 0
    out_dir: str = "out"

    def effective_engine(self) -> EngineConfig:
        """Engine with the run's seed applied and noise switched off if requested."""
        cfg = replace(self.engine, noise=replace(self.engine.noise, rng_seed=int(self.seed)))
        return cfg if self.noise else cfg.noiseless()

    def to_dict(self) -> dict:
        doc = _to_plain(self)
        doc["engine"] = engine_to_dict(self.engine)
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


_PATH_KEYS = ("image", "data_dir", "weights", "kernel", "detector")


def parse_run_config(doc: dict, check_paths: bool = True) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigurationError("config root must be an object")
    fields = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(doc) - fields)
    if unknown:
        raise ConfigurationError(f"config: unknown key(s) {', '.join(unknown)}")
    kwargs = {k: v for k, v in doc.items() if k != "engine"}
    if "engine" in doc:
        kwargs["engine"] = engine_from_dict(doc["engine"])
    if not isinstance(kwargs.get("noise", True), bool):
        raise ConfigurationError("config.noise must be true or false")
    cfg = RunConfig(**kwargs)
    if check_paths:
        for key in _PATH_KEYS:
            value = getattr(cfg, key)
            if value is not None and not Path(value).exists():
                raise ConfigurationError(f"config.{key}: path {value!r} does not exist")
    return cfg


def load_run_config(path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from None
    return parse_run_config(doc)
