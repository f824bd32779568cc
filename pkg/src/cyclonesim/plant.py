"""Physical-side twin: gates, hopper, thermocouples, fault injection.

Everything here is an invented but documented stand-in for hardware
the control design treats as given: pneumatic gate cylinders with a
finite stroke time, closed-limit switches with a hysteresis band,
a hopper that fills and drains while the respective gate is open wide
enough, and thermocouples read through the 16-bit frame codec at a
1 Hz conversion cadence.  All parameters live in PlantConfig.

Gate positions are tracked in integer thousandths of a stroke so that
threshold comparisons (flow cutoff, switch bands) are exact run to
run instead of drifting with accumulated float error.

Faults are injected as FaultSpec records keyed by the physical
element they damage; a second, different fault on the same element is
rejected rather than silently stacked.  Every fault carries an
activation time and is inert before it.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum

from .codec import MAX_TEMP_C, TempFault, decode_max6675, encode_max6675
from .controller import GateCmd, GateCommands, SensorImage

__all__ = ["FaultKind", "FaultSpec", "PlantConfig", "PlantSim"]

_GATES = ("upper", "lower")
_SWITCHES = ("upper_closed", "lower_closed")


class FaultKind(Enum):
    STUCK_CYLINDER = "STUCK_CYLINDER"
    SLOW_CYLINDER = "SLOW_CYLINDER"
    LIMIT_SWITCH_STUCK = "LIMIT_SWITCH_STUCK"
    LEVEL_INTERFERENCE = "LEVEL_INTERFERENCE"
    THERMOCOUPLE_OPEN = "THERMOCOUPLE_OPEN"


@dataclass(frozen=True)
class FaultSpec:
    """One injected defect.  Only the fields its kind needs are set.

    t_ms is the activation time; the fault has no effect before it.
    """

    kind: FaultKind
    gate: str | None = None      # STUCK_CYLINDER, SLOW_CYLINDER
    switch: str | None = None    # LIMIT_SWITCH_STUCK
    sensor: str | None = None    # THERMOCOUPLE_OPEN
    value: bool | None = None    # LIMIT_SWITCH_STUCK
    factor: float | None = None  # SLOW_CYLINDER speed scale, (0, 1]
    rate: float | None = None    # LEVEL_INTERFERENCE flip probability
    t_ms: int = 0


@dataclass
class PlantConfig:
    """Physical parameters.  All invented: the machine's real rates
    were never instrumented, so these are chosen to give a plausible,
    well-balanced nominal cycle and are documented in the README."""

    travel_ms: int = 500
    fill_rate_per_s: float = 0.018
    discharge_rate_per_s: float = 0.074
    # A gate passes material only once nearly fully open.
    flow_threshold: float = 0.9
    switch_make: float = 0.02
    switch_release: float = 0.05
    level_high_threshold: float = 0.8
    level_low_threshold: float = 0.1
    ambient_temp_c: float = 25.0
    material_temp_c: float = 350.0
    heating_tau_s: float = 8.0
    thermo_sample_ms: int = 1000
    shield_installed: bool = False
    initial_level: float = 0.0


def _element(spec: FaultSpec) -> tuple:
    if spec.kind in (FaultKind.STUCK_CYLINDER, FaultKind.SLOW_CYLINDER):
        return ("cylinder", spec.gate)
    if spec.kind is FaultKind.LIMIT_SWITCH_STUCK:
        return ("switch", spec.switch)
    if spec.kind is FaultKind.LEVEL_INTERFERENCE:
        return ("level",)
    return ("thermocouple", spec.sensor)


def _validate(spec: FaultSpec) -> None:
    if not isinstance(spec.t_ms, int) or spec.t_ms < 0:
        raise ValueError(f"activation time must be a non-negative int: {spec.t_ms!r}")
    kind = spec.kind
    if kind in (FaultKind.STUCK_CYLINDER, FaultKind.SLOW_CYLINDER):
        if spec.gate not in _GATES:
            raise ValueError(f"gate must be one of {_GATES}: {spec.gate!r}")
        if kind is FaultKind.SLOW_CYLINDER:
            f = spec.factor
            if f is None or not (isinstance(f, float) and 0.0 < f <= 1.0):
                raise ValueError(f"slow factor must be in (0, 1]: {f!r}")
    elif kind is FaultKind.LIMIT_SWITCH_STUCK:
        if spec.switch not in _SWITCHES:
            raise ValueError(f"switch must be one of {_SWITCHES}: {spec.switch!r}")
        if not isinstance(spec.value, bool):
            raise ValueError("stuck switch needs a bool value")
    elif kind is FaultKind.LEVEL_INTERFERENCE:
        r = spec.rate
        if r is None or not (0.0 <= r <= 1.0):
            raise ValueError(f"interference rate must be in [0, 1]: {r!r}")
    elif kind is FaultKind.THERMOCOUPLE_OPEN:
        if spec.sensor not in _GATES:
            raise ValueError(f"sensor must be one of {_GATES}: {spec.sensor!r}")


class PlantSim:
    """Time-stepped plant state; deterministic for a given seed."""

    def __init__(self, config: PlantConfig | None = None, seed: int = 0):
        self.config = config or PlantConfig()
        if not 0.0 <= self.config.initial_level <= 1.0:
            raise ValueError("initial_level must be within [0, 1]")
        self.time_ms = 0
        self.level = self.config.initial_level
        self._pos_mu = {"upper": 0, "lower": 0}  # thousandths of a stroke
        self._switch = {"upper": True, "lower": True}
        ambient = self.config.ambient_temp_c
        self._true_temp = {"upper": ambient, "lower": ambient}
        self.last_sample_c = {"upper": ambient, "lower": ambient}
        self.last_raw_words = {"upper": 0, "lower": 0}
        self._faults: dict[tuple, FaultSpec] = {}
        self._rng = random.Random(seed)
        self._next_sample_ms = self.config.thermo_sample_ms
        self._convert(0)

    # -- state views --------------------------------------------------

    @property
    def upper_pos(self) -> float:
        return self._pos_mu["upper"] / 1000

    @property
    def lower_pos(self) -> float:
        return self._pos_mu["lower"] / 1000

    @property
    def upper_temp_c(self) -> float:
        return self._true_temp["upper"]

    @property
    def lower_temp_c(self) -> float:
        return self._true_temp["lower"]

    def cylinder_health(self) -> dict[str, str]:
        out = {}
        for gate in _GATES:
            spec = self._active_fault(("cylinder", gate), self.time_ms)
            if spec is None:
                out[gate] = "OK"
            else:
                out[gate] = "STUCK" if spec.kind is FaultKind.STUCK_CYLINDER else "SLOW"
        return out

    def active_faults(self) -> list[FaultSpec]:
        return list(self._faults.values())

    # -- fault injection ----------------------------------------------

    def inject_fault(self, spec: FaultSpec) -> None:
        _validate(spec)
        key = _element(spec)
        existing = self._faults.get(key)
        if existing is not None and existing != spec:
            raise ValueError(f"conflicting fault already injected on {key}")
        self._faults[key] = spec

    def _active_fault(self, key: tuple, at_ms: int) -> FaultSpec | None:
        spec = self._faults.get(key)
        if spec is not None and at_ms >= spec.t_ms:
            return spec
        return None

    # -- dynamics -------------------------------------------------------

    def sim_step(self, commands: GateCommands, dt_ms: int) -> None:
        cfg = self.config
        t0 = self.time_ms  # faults engage against the step's start time
        self.time_ms = t0 + dt_ms
        for gate, cmd in (("upper", commands.upper), ("lower", commands.lower)):
            health = self._active_fault(("cylinder", gate), t0)
            if health is not None and health.kind is FaultKind.STUCK_CYLINDER:
                continue
            speed = health.factor if health is not None else 1.0
            delta = round(1000 * dt_ms * speed / cfg.travel_ms)
            target = 1000 if cmd is GateCmd.OPEN else 0
            mu = self._pos_mu[gate]
            if mu < target:
                mu = min(target, mu + delta)
            elif mu > target:
                mu = max(target, mu - delta)
            self._pos_mu[gate] = mu
        for gate in _GATES:
            pos = self._pos_mu[gate] / 1000
            if pos < cfg.switch_make:
                self._switch[gate] = True
            elif pos > cfg.switch_release:
                self._switch[gate] = False
        dt_s = dt_ms / 1000
        if self.upper_pos > cfg.flow_threshold:
            self.level += cfg.fill_rate_per_s * dt_s
        if self.lower_pos > cfg.flow_threshold:
            self.level -= cfg.discharge_rate_per_s * dt_s
        self.level = min(1.0, max(0.0, self.level))
        alpha = 1.0 - math.exp(-dt_s / cfg.heating_tau_s)
        for gate in _GATES:
            flowing = self._pos_mu[gate] / 1000 > cfg.flow_threshold
            target = cfg.material_temp_c if flowing else cfg.ambient_temp_c
            self._true_temp[gate] += (target - self._true_temp[gate]) * alpha
        while self.time_ms >= self._next_sample_ms:
            self._convert(self._next_sample_ms)
            self._next_sample_ms += cfg.thermo_sample_ms

    def _convert(self, at_ms: int) -> None:
        # One thermocouple conversion: the device truncates to 0.25
        # degree codes and flags an open circuit in the frame itself.
        for sensor in _GATES:
            is_open = self._active_fault(("thermocouple", sensor), at_ms) is not None
            temp = min(MAX_TEMP_C, max(0.0, self._true_temp[sensor]))
            self.last_raw_words[sensor] = encode_max6675(temp, open_circuit=is_open)
            self.last_sample_c[sensor] = temp

    # -- sensor emission ------------------------------------------------

    def read_sensors(self) -> SensorImage:
        cfg = self.config
        now = self.time_ms
        switches = {}
        for gate, switch_name in (("upper", "upper_closed"), ("lower", "lower_closed")):
            stuck = self._active_fault(("switch", switch_name), now)
            switches[gate] = stuck.value if stuck is not None else self._switch[gate]
        level_high = self.level > cfg.level_high_threshold
        level_low = self.level < cfg.level_low_threshold
        interference = self._active_fault(("level",), now)
        if interference is not None and not cfg.shield_installed:
            # Independent Bernoulli flip per bit per read, high bit
            # drawn first; the draw order is part of the determinism
            # contract.
            if self._rng.random() < interference.rate:
                level_high = not level_high
            if self._rng.random() < interference.rate:
                level_low = not level_low
        temps = {}
        for sensor in _GATES:
            reading = decode_max6675(self.last_raw_words[sensor])
            temps[sensor] = None if isinstance(reading, TempFault) else reading
        return SensorImage(
            upper_closed_limit=switches["upper"],
            lower_closed_limit=switches["lower"],
            upper_temp_c=temps["upper"],
            lower_temp_c=temps["lower"],
            level_high=level_high,
            level_low=level_low,
        )
