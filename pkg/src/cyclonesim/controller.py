"""Scan-cycle controller for the two-gate catalyst transfer machine.

The controller runs a fixed-period scan.  Each step latches one sensor
image, evaluates the temperature guard, advances the phase clock (AUTO
only), derives the desired gate pair, passes it through the interlock,
and energizes the valve solenoids from whatever survives.  Order
matters and is pinned by the tests: a reading over the alarm threshold
closes both gates on the same scan it is seen.

Phase timing is advance-then-emit: the clock is bumped first and the
commands for the *resulting* phase are emitted.  With the default
50 ms scan this puts the phase boundaries exactly at the preset
multiples (scan 240, 400, 480 of each 24 s cycle) and makes the very
first upper-open segment one scan short, which is inside the one-tick
tolerance the timing contract allows.

The interlock never lets a commanded pair with both gates open reach
the valves.  A denial is not always a fault: right after a gate's open
command drops, its closed-limit switch lags by the ~0.5 s of cylinder
travel, so the opposing open is withheld (gate kept closed) for a
configurable settle window instead of alarming.  A switch that is
still not made once the window runs out, or was never preceded by an
open command at all, trips INTERLOCK_BLOCK and the machine latches
into SAFE_HOLD until an operator reset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

__all__ = [
    "Alarm",
    "CommandResult",
    "ControllerConfig",
    "GateCmd",
    "GateCommands",
    "GateController",
    "InterlockVerdict",
    "Mode",
    "Phase",
    "SensorImage",
    "ValveState",
    "check_interlock",
]


class GateCmd(Enum):
    OPEN = "OPEN"
    CLOSED = "CLOSED"


class Mode(Enum):
    AUTO = "AUTO"
    MANUAL = "MANUAL"
    HALTED = "HALTED"


class Phase(Enum):
    FILL_A = "FILL_A"
    FILL_B = "FILL_B"
    DWELL = "DWELL"
    DISCHARGE = "DISCHARGE"
    SAFE_HOLD = "SAFE_HOLD"


class Alarm(Enum):
    INTERLOCK_BLOCK = "INTERLOCK_BLOCK"
    TEMP_ALARM = "TEMP_ALARM"
    SENSOR_FAULT = "SENSOR_FAULT"
    LEVEL_STUCK = "LEVEL_STUCK"


@dataclass(frozen=True)
class GateCommands:
    upper: GateCmd
    lower: GateCmd


BOTH_CLOSED = GateCommands(GateCmd.CLOSED, GateCmd.CLOSED)


@dataclass(frozen=True)
class SensorImage:
    """One scan's worth of field inputs.

    A temperature of None means the reading was lost (open
    thermocouple or a mangled frame); the guard treats that as a
    sensor fault rather than a value.
    """

    upper_closed_limit: bool
    lower_closed_limit: bool
    upper_temp_c: float | None
    lower_temp_c: float | None
    level_high: bool
    level_low: bool


@dataclass(frozen=True)
class InterlockVerdict:
    allowed: bool
    reason: str | None = None
    # Set when a closed-limit switch is what blocks the request; names
    # the gate whose switch is not made.
    blocking_gate: str | None = None


def check_interlock(sensors: SensorImage, desired: GateCommands) -> InterlockVerdict:
    """Mutual-exclusion rule for the gate pair.

    Pure function of one sensor image and one desired pair, so the
    same rule serves the per-scan output stage and the manual request
    path.  Opening a gate requires the other gate's closed-limit
    switch; asking for both open is denied regardless of switches.
    """
    opens_upper = desired.upper is GateCmd.OPEN
    opens_lower = desired.lower is GateCmd.OPEN
    if opens_upper and opens_lower:
        return InterlockVerdict(False, "both gates requested open")
    if opens_upper and not sensors.lower_closed_limit:
        return InterlockVerdict(False, "lower gate not confirmed closed", "lower")
    if opens_lower and not sensors.upper_closed_limit:
        return InterlockVerdict(False, "upper gate not confirmed closed", "upper")
    return InterlockVerdict(True)


@dataclass(frozen=True)
class CommandResult:
    accepted: bool
    reason: str | None = None


_ACCEPTED = CommandResult(True)


@dataclass
class ValveState:
    """5/2 impulse valve: the spool keeps its last position unpowered."""

    latched: GateCmd = GateCmd.CLOSED
    open_coil: bool = False
    close_coil: bool = False


@dataclass
class ControllerConfig:
    scan_dt_ms: int = 50
    fill_a_ms: int = 8000
    fill_b_ms: int = 4000
    dwell_ms: int = 8000
    discharge_ms: int = 4000
    temp_alarm_c: float = 400.0
    # How long a just-closed gate may take to make its limit switch
    # before a blocked open is treated as a fault.  Covers the ~0.5 s
    # cylinder stroke with margin.
    interlock_grace_ms: int = 1500
    level_automation: bool = False


_PHASE_DESIRED = {
    Phase.FILL_A: GateCommands(GateCmd.OPEN, GateCmd.CLOSED),
    Phase.FILL_B: GateCommands(GateCmd.OPEN, GateCmd.CLOSED),
    Phase.DWELL: BOTH_CLOSED,
    Phase.DISCHARGE: GateCommands(GateCmd.CLOSED, GateCmd.OPEN),
    Phase.SAFE_HOLD: BOTH_CLOSED,
}

_NEXT_PHASE = {
    Phase.FILL_A: Phase.FILL_B,
    Phase.FILL_B: Phase.DWELL,
    Phase.DWELL: Phase.DISCHARGE,
}

_GATE_REQUESTS = {"open_upper", "close_upper", "open_lower", "close_lower"}


class GateController:
    """Mode/phase state machine producing one GateCommands per scan."""

    def __init__(self, config: ControllerConfig | None = None):
        self.config = config or ControllerConfig()
        self.mode = Mode.HALTED
        self.phase = Phase.FILL_A
        self.phase_elapsed_ms = 0
        self.time_ms = 0
        self.alarms: set[Alarm] = set()
        self.upper_valve = ValveState()
        self.lower_valve = ValveState()
        self.manual_desired = BOTH_CLOSED
        self.last_commands = BOTH_CLOSED
        self.last_sensors: SensorImage | None = None
        # Time of the most recent scan whose emitted command held the
        # gate open; None until the first such scan.  Basis for the
        # interlock settle window.
        self._last_open_emit: dict[str, int | None] = {"upper": None, "lower": None}

    # -- scan cycle -------------------------------------------------

    def step(self, sensors: SensorImage, dt_ms: int) -> GateCommands:
        if dt_ms != self.config.scan_dt_ms:
            raise ValueError(
                f"scan period is {self.config.scan_dt_ms} ms, got {dt_ms} ms"
            )
        self.time_ms += dt_ms
        self.last_sensors = sensors
        if self.mode is Mode.HALTED:
            # A halted machine acts on nothing: no guard, no clock, no
            # energization.  The valves hold whatever they latched.
            return self._emit(
                GateCommands(self.upper_valve.latched, self.lower_valve.latched)
            )
        self._run_guard(sensors)
        if self.mode is Mode.AUTO and self.phase is not Phase.SAFE_HOLD:
            self._advance_clock(sensors, dt_ms)
        return self._emit(self._apply_interlock(sensors, self._desired()))

    def _run_guard(self, sensors: SensorImage) -> None:
        readings = (sensors.upper_temp_c, sensors.lower_temp_c)
        if any(r is None or not math.isfinite(r) for r in readings):
            self._enter_safe_hold(Alarm.SENSOR_FAULT)
        if any(r is not None and math.isfinite(r) and r > self.config.temp_alarm_c
               for r in readings):
            self._enter_safe_hold(Alarm.TEMP_ALARM)

    def _advance_clock(self, sensors: SensorImage, dt_ms: int) -> None:
        cfg = self.config
        if (
            cfg.level_automation
            and self.phase in (Phase.FILL_A, Phase.FILL_B)
            and sensors.level_high
        ):
            # Hopper already full: skip the rest of the fill.
            self.phase, self.phase_elapsed_ms = Phase.DWELL, 0
            return
        self.phase_elapsed_ms += dt_ms
        if self.phase is Phase.DISCHARGE:
            if self.phase_elapsed_ms < cfg.discharge_ms:
                return
            if not cfg.level_automation or sensors.level_low:
                self.phase, self.phase_elapsed_ms = Phase.FILL_A, 0
            elif self.phase_elapsed_ms >= 2 * cfg.discharge_ms:
                # One full extra preset of discharging never emptied
                # the hopper: the outlet is blocked.
                self._enter_safe_hold(Alarm.LEVEL_STUCK)
            return
        if self.phase_elapsed_ms >= self._preset(self.phase):
            self.phase = _NEXT_PHASE[self.phase]
            self.phase_elapsed_ms = 0

    def _preset(self, phase: Phase) -> int:
        return {
            Phase.FILL_A: self.config.fill_a_ms,
            Phase.FILL_B: self.config.fill_b_ms,
            Phase.DWELL: self.config.dwell_ms,
            Phase.DISCHARGE: self.config.discharge_ms,
        }[phase]

    def _desired(self) -> GateCommands:
        if self.phase is Phase.SAFE_HOLD:
            return BOTH_CLOSED
        if self.mode is Mode.AUTO:
            return _PHASE_DESIRED[self.phase]
        return self.manual_desired

    def _apply_interlock(
        self, sensors: SensorImage, desired: GateCommands
    ) -> GateCommands:
        verdict = check_interlock(sensors, desired)
        if verdict.allowed:
            return desired
        if verdict.blocking_gate is not None:
            opened = self._last_open_emit[verdict.blocking_gate]
            if (
                opened is not None
                and self.time_ms - opened <= self.config.interlock_grace_ms
            ):
                # The blocking gate's open command dropped only a
                # moment ago; it is still travelling shut.  Keep the
                # requesting gate closed and try again next scan.
                if verdict.blocking_gate == "lower":
                    return GateCommands(GateCmd.CLOSED, desired.lower)
                return GateCommands(desired.upper, GateCmd.CLOSED)
        self._enter_safe_hold(Alarm.INTERLOCK_BLOCK)
        return BOTH_CLOSED

    def _enter_safe_hold(self, alarm: Alarm) -> None:
        self.alarms.add(alarm)
        if self.phase is not Phase.SAFE_HOLD:
            self.phase = Phase.SAFE_HOLD
            self.phase_elapsed_ms = 0
        self.manual_desired = BOTH_CLOSED

    def _emit(self, pair: GateCommands) -> GateCommands:
        for name, valve, cmd in (
            ("upper", self.upper_valve, pair.upper),
            ("lower", self.lower_valve, pair.lower),
        ):
            if self.mode is Mode.HALTED:
                new_open = new_close = False
            else:
                new_open = cmd is GateCmd.OPEN
                new_close = cmd is GateCmd.CLOSED
            # The spool moves on a rising edge of either coil and
            # stays put when both are dead.
            if new_open and not valve.open_coil:
                valve.latched = GateCmd.OPEN
            if new_close and not valve.close_coil:
                valve.latched = GateCmd.CLOSED
            valve.open_coil, valve.close_coil = new_open, new_close
            if new_open:
                self._last_open_emit[name] = self.time_ms
        self.last_commands = pair
        return pair

    # -- operator requests --------------------------------------------

    def request_manual(self, name: str, arg: str | None = None) -> CommandResult:
        """Apply one operator command; rejected commands change nothing."""
        if name == "start":
            if self.mode is not Mode.AUTO:
                self.mode = Mode.AUTO
                if self.phase is not Phase.SAFE_HOLD:
                    self.phase, self.phase_elapsed_ms = Phase.FILL_A, 0
                self.manual_desired = BOTH_CLOSED
            return _ACCEPTED
        if name == "stop":
            self.mode = Mode.HALTED
            return _ACCEPTED
        if name == "set_mode":
            try:
                target = Mode[arg]  # type: ignore[index]
            except (KeyError, TypeError):
                return CommandResult(False, f"unknown mode: {arg!r}")
            if target is not self.mode:
                self.mode = target
                if target is Mode.MANUAL:
                    # Seed manual control from where the gates are, so
                    # the mode switch itself moves nothing.
                    self.manual_desired = GateCommands(
                        self.upper_valve.latched, self.lower_valve.latched
                    )
            return _ACCEPTED
        if name == "reset_alarms":
            return self._reset_alarms()
        if name in _GATE_REQUESTS:
            return self._gate_request(name)
        return CommandResult(False, f"unknown command: {name}")

    def _gate_request(self, name: str) -> CommandResult:
        if self.mode is not Mode.MANUAL:
            return CommandResult(False, "gate commands require MANUAL mode")
        action, _, gate = name.partition("_")
        want = GateCmd.OPEN if action == "open" else GateCmd.CLOSED
        if gate == "upper":
            new_pair = GateCommands(want, self.manual_desired.lower)
        else:
            new_pair = GateCommands(self.manual_desired.upper, want)
        if want is GateCmd.OPEN:
            if self.phase is Phase.SAFE_HOLD:
                return CommandResult(False, "machine is in safe hold")
            if self.last_sensors is None:
                return CommandResult(False, "no sensor scan yet")
            verdict = check_interlock(self.last_sensors, new_pair)
            if not verdict.allowed:
                return CommandResult(False, f"interlock: {verdict.reason}")
        self.manual_desired = new_pair
        return _ACCEPTED

    def _reset_alarms(self) -> CommandResult:
        if self.alarms and self.last_sensors is None:
            return CommandResult(False, "no sensor scan yet")
        still = sorted(
            a.value for a in self.alarms if not self._condition_cleared(a)
        )
        if still:
            return CommandResult(False, f"condition still present: {', '.join(still)}")
        self.alarms.clear()
        if self.phase is Phase.SAFE_HOLD:
            self.phase, self.phase_elapsed_ms = Phase.FILL_A, 0
        return _ACCEPTED

    def _condition_cleared(self, alarm: Alarm) -> bool:
        s = self.last_sensors
        assert s is not None
        readings = (s.upper_temp_c, s.lower_temp_c)
        if alarm is Alarm.TEMP_ALARM:
            return not any(
                r is not None and math.isfinite(r) and r > self.config.temp_alarm_c
                for r in readings
            )
        if alarm is Alarm.SENSOR_FAULT:
            return all(r is not None and math.isfinite(r) for r in readings)
        if alarm is Alarm.INTERLOCK_BLOCK:
            return s.upper_closed_limit and s.lower_closed_limit
        if alarm is Alarm.LEVEL_STUCK:
            return s.level_low
        return False
