"""One closed-loop run: controller and plant stepped in lockstep.

Every tick reads the plant's sensors, feeds them to the controller,
and applies the resulting commands back to the plant.  The session
also owns the things a single run accumulates: snapshot frames at a
fixed cadence, safety-invariant counters (which must stay at zero),
cycle counting, and first-occurrence alarm timestamps for the report.

Frames use the wire schema directly, so whatever consumes a session
(CLI run, telemetry server, tests) serializes each frame exactly once
and every downstream copy of it is byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .controller import Alarm, GateCmd, GateController, Mode, Phase, SensorImage
from .controller import CommandResult, GateCommands
from .plant import PlantSim
from .scenario import Scenario

__all__ = ["FRAME_FIELDS", "SimSession", "TickResult", "frame_json"]

FRAME_FIELDS = (
    "type",
    "seq",
    "t_ms",
    "clock",
    "phase",
    "mode",
    "upper_cmd",
    "lower_cmd",
    "upper_pos",
    "lower_pos",
    "upper_closed_sw",
    "lower_closed_sw",
    "upper_temp_c",
    "lower_temp_c",
    "level_high",
    "level_low",
    "alarms",
)


def frame_json(frame: dict) -> str:
    """Canonical single-line serialization; key order is schema order."""
    return json.dumps(frame, separators=(",", ":"), allow_nan=False)


@dataclass
class TickResult:
    image: SensorImage
    commands: GateCommands
    frame: dict | None  # present on snapshot ticks


class SimSession:
    def __init__(self, scenario: Scenario, snapshot_hz: float = 10.0):
        self.scenario = scenario
        self.controller = GateController(scenario.controller)
        self.plant = PlantSim(scenario.plant, seed=scenario.seed)
        for spec in scenario.faults:
            self.plant.inject_fault(spec)
        if scenario.initial_mode == "AUTO":
            self.controller.request_manual("start")
        self.dt = scenario.controller.scan_dt_ms
        if snapshot_hz <= 0:
            raise ValueError("snapshot_hz must be positive")
        self.frame_every = max(1, round(1000 / (snapshot_hz * self.dt)))
        self.ticks = 0
        self.seq = 0
        self.cycles_completed = 0
        self.alarm_events: list[tuple[int, Alarm]] = []
        self._violations = {"both_open_commands": 0, "dual_energization": 0}

    def tick(self) -> TickResult:
        ctrl = self.controller
        image = self.plant.read_sensors()
        prev_phase = ctrl.phase
        prev_alarms = set(ctrl.alarms)
        cmds = ctrl.step(image, self.dt)
        self.plant.sim_step(cmds, self.dt)
        self.ticks += 1
        if cmds.upper is GateCmd.OPEN and cmds.lower is GateCmd.OPEN:
            self._violations["both_open_commands"] += 1
        for valve in (ctrl.upper_valve, ctrl.lower_valve):
            if valve.open_coil and valve.close_coil:
                self._violations["dual_energization"] += 1
        if prev_phase is Phase.DISCHARGE and ctrl.phase is Phase.FILL_A:
            self.cycles_completed += 1
        for alarm in sorted(ctrl.alarms - prev_alarms, key=lambda a: a.value):
            self.alarm_events.append((ctrl.time_ms, alarm))
        frame = None
        if self.ticks % self.frame_every == 0:
            self.seq += 1
            frame = self._build_frame(image, cmds)
        return TickResult(image, cmds, frame)

    def run(self, duration_ms: int | None = None):
        """Tick through the scenario (or an explicit duration); yields
        every TickResult so callers can stream frames as they form."""
        total = duration_ms if duration_ms is not None else self.scenario.duration_ms
        for _ in range(total // self.dt):
            yield self.tick()

    def command(self, name: str, arg: str | None = None) -> CommandResult:
        return self.controller.request_manual(name, arg)

    def invariant_violations(self) -> int:
        return sum(self._violations.values())

    def _build_frame(self, image: SensorImage, cmds: GateCommands) -> dict:
        ctrl = self.controller
        return {
            "type": "frame",
            "seq": self.seq,
            "t_ms": ctrl.time_ms,
            "clock": "sim",
            "phase": ctrl.phase.value,
            "mode": ctrl.mode.value,
            "upper_cmd": cmds.upper.value,
            "lower_cmd": cmds.lower.value,
            "upper_pos": self.plant.upper_pos,
            "lower_pos": self.plant.lower_pos,
            "upper_closed_sw": image.upper_closed_limit,
            "lower_closed_sw": image.lower_closed_limit,
            "upper_temp_c": "FAULT" if image.upper_temp_c is None else image.upper_temp_c,
            "lower_temp_c": "FAULT" if image.lower_temp_c is None else image.lower_temp_c,
            "level_high": image.level_high,
            "level_low": image.level_low,
            "alarms": sorted(a.value for a in ctrl.alarms),
        }

    def report(self) -> dict:
        return {
            "scenario": self.scenario.name,
            "seed": self.scenario.seed,
            "duration_ms": self.controller.time_ms,
            "cycles_completed": self.cycles_completed,
            "alarms": [
                {"t_ms": t, "alarm": alarm.value} for t, alarm in self.alarm_events
            ],
            "invariant_violations": self.invariant_violations(),
            "final": {
                "time_ms": self.controller.time_ms,
                "phase": self.controller.phase.value,
                "mode": self.controller.mode.value,
                "level": round(self.plant.level, 6),
                "upper_pos": self.plant.upper_pos,
                "lower_pos": self.plant.lower_pos,
            },
        }

    def report_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True) + "\n"
