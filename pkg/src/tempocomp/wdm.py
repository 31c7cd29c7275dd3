"""Wavelength x spatial-channel x time-slot tiling of an M x N by L x N multiply.

Data rows ride on wavelengths, weight rows on spatial channels: in each time
slot every spatial channel's weight modulator is shared by all wavelengths
multiplexed onto it, and a demultiplexer routes each wavelength to its own
detector.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .engine import CalibrationResult, EngineConfig, simulate
from .errors import DimensionError, FormatError


class Assignment(NamedTuple):
    data_row: int
    weight_row: int
    wavelength: int
    spatial: int
    slot: int


@dataclass(frozen=True)
class ChannelPlan:
    m: int
    n: int
    l: int
    n_wavelengths: int
    n_spatial: int
    assignments: tuple[Assignment, ...] = field(repr=False)
    crosstalk_db: float = -math.inf

    @property
    def n_slots(self) -> int:
        return math.ceil(self.m / self.n_wavelengths) * math.ceil(self.l / self.n_spatial)

    @property
    def parallel_channels(self) -> int:
        """Distinct (wavelength, spatial) detector channels the plan keeps busy."""
        return min(self.m, self.n_wavelengths) * min(self.l, self.n_spatial)

    @property
    def leakage(self) -> float:
        return 0.0 if self.crosstalk_db == -math.inf else 10.0 ** (self.crosstalk_db / 10.0)

    def validate(self) -> None:
        pairs = {(a.data_row, a.weight_row) for a in self.assignments}
        expected = {(i, j) for i in range(self.m) for j in range(self.l)}
        if pairs != expected or len(self.assignments) != len(expected):
            raise DimensionError("plan does not cover every (data row, weight row) pair exactly once")
        cells = {(a.wavelength, a.spatial, a.slot) for a in self.assignments}
        if len(cells) != len(self.assignments):
            raise DimensionError("two assignments share a (wavelength, spatial, slot) cell")
        if self.assignments and max(a.slot for a in self.assignments) + 1 > self.n_slots:
            raise DimensionError("plan uses more time slots than the tiling allows")
        for a in self.assignments:
            if not (0 <= a.wavelength < self.n_wavelengths and 0 <= a.spatial < self.n_spatial):
                raise DimensionError(f"assignment {a} uses a channel outside the plan")
        if self.crosstalk_db > 0:
            raise DimensionError("crosstalk_db must be non-positive")

    def to_json(self) -> str:
        doc = {
            "M": self.m, "N": self.n, "L": self.l,
            "n_wavelengths": self.n_wavelengths, "n_spatial": self.n_spatial,
            "n_slots": self.n_slots,
            "crosstalk_db": None if self.crosstalk_db == -math.inf else self.crosstalk_db,
            "assignments": [a._asdict() for a in self.assignments],
        }
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ChannelPlan":
        try:
            doc = json.loads(text)
            xt = doc.get("crosstalk_db")
            plan = cls(doc["M"], doc["N"], doc["L"], doc["n_wavelengths"], doc["n_spatial"],
                       tuple(Assignment(**a) for a in doc["assignments"]),
                       -math.inf if xt is None else float(xt))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed plan: {exc}") from None
        plan.validate()
        return plan


def plan_matmul(m: int, n: int, l: int, n_wavelengths: int, n_spatial: int,
                crosstalk_db: float = -math.inf) -> ChannelPlan:
    if min(m, n, l, n_wavelengths, n_spatial) < 1:
        raise DimensionError("all plan dimensions must be >= 1")
    weight_groups = math.ceil(l / n_spatial)
    assignments = tuple(
        Assignment(i, j, i % n_wavelengths, j % n_spatial,
                   (i // n_wavelengths) * weight_groups + j // n_spatial)
        for i in range(m) for j in range(l)
    )
    plan = ChannelPlan(m, n, l, n_wavelengths, n_spatial, assignments, crosstalk_db)
    plan.validate()
    return plan


def execute_plan(data, weights, plan: ChannelPlan, cfg: EngineConfig,
                 cal: CalibrationResult, stream=()) -> np.ndarray:
    """Run every assignment on the engine of its (wavelength, spatial) channel.

    With a finite ``crosstalk_db`` each detector also collects the leaked
    photocurrent of the other wavelengths sharing its slot and spatial channel.
    """
    d = np.atleast_2d(np.asarray(data, dtype=np.float64))
    w = np.atleast_2d(np.asarray(weights, dtype=np.float64))
    if d.shape != (plan.m, plan.n) or w.shape != (plan.l, plan.n):
        raise DimensionError(
            f"plan expects data {plan.m}x{plan.n} and weights {plan.l}x{plan.n}, "
            f"got {d.shape} and {w.shape}")

    by_channel: dict[tuple[int, int], list[Assignment]] = {}
    for a in plan.assignments:
        by_channel.setdefault((a.wavelength, a.spatial), []).append(a)

    raw: dict[Assignment, float] = {}
    for (wl, sp), items in sorted(by_channel.items()):
        items.sort(key=lambda a: a.slot)
        volts = simulate(d[[a.data_row for a in items]], w[[a.weight_row for a in items]],
                         cfg, cal.found_sync_offset, channel=wl * plan.n_spatial + sp,
                         stream=stream)
        raw.update(zip(items, volts))

    kappa = plan.leakage
    out = np.zeros((plan.m, plan.l))
    if kappa:
        shared: dict[tuple[int, int], list[Assignment]] = {}
        for a in plan.assignments:
            shared.setdefault((a.slot, a.spatial), []).append(a)
    for a, v in raw.items():
        if kappa:
            v = v + kappa * sum(raw[b] for b in shared[(a.slot, a.spatial)] if b is not a)
        out[a.data_row, a.weight_row] = (v - cal.residual_offset) / cal.gain
    return out


def throughput_estimate(plan: ChannelPlan, symbol_rate: float, guard_symbols: int = 0) -> float:
    """Operations per second: one multiply and one add per symbol per active channel."""
    if not symbol_rate > 0:
        raise DimensionError("symbol_rate must be positive")
    duty = plan.n / (plan.n + guard_symbols)
    return 2.0 * symbol_rate * plan.parallel_channels * duty


def format_ops(ops: float) -> str:
    for unit, scale in (("POPS", 1e15), ("TOPS", 1e12), ("GOPS", 1e9), ("MOPS", 1e6)):
        if ops >= scale:
            return f"{ops / scale:g} {unit}"
    return f"{ops:g} OPS"
