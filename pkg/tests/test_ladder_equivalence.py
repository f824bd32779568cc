"""The packaged ladder program against the native controller.

Both are driven with identical per-scan sensor images (produced by a
plant closed around the native controller) and must emit the same
(upper, lower) command pair on every single scan.  The heavyweight
hundred-cycle run lives with the acceptance checks; these cover ten
nominal cycles plus the trip behaviours.
"""

import math
from importlib.resources import files

from cyclonesim.controller import (
    Alarm,
    ControllerConfig,
    GateCmd,
    GateController,
)
from cyclonesim.ladder import initial_image, parse_ladder, scan
from cyclonesim.plant import FaultKind, FaultSpec, PlantConfig, PlantSim

DT = 50


def load_program():
    source = files("cyclonesim").joinpath("assets/cyclone.lad").read_text()
    result = parse_ladder(source)
    assert result.program is not None, [str(d) for d in result.diagnostics]
    return result.program


class LadderTwin:
    """Adapter feeding SensorImage values into the ladder's inputs."""

    def __init__(self):
        self.program = load_program()
        self.image = initial_image(self.program)

    def step(self, sensors, dt_ms):
        v = self.image.values
        v["run"] = True
        v["upper_closed_sw"] = sensors.upper_closed_limit
        v["lower_closed_sw"] = sensors.lower_closed_limit
        for name, reading in (
            ("upper", sensors.upper_temp_c),
            ("lower", sensors.lower_temp_c),
        ):
            lost = reading is None or not math.isfinite(reading)
            v[f"{name}_temp_fault"] = lost
            v[f"{name}_temp_c"] = 0.0 if lost else reading
        self.image = scan(self.program, self.image, dt_ms)
        out = self.image.values
        return (out["upper_open_cmd"], out["lower_open_cmd"])


def run_both(plant, steps):
    """Native controller drives the plant; the ladder shadows it."""
    ctrl = GateController(ControllerConfig())
    assert ctrl.request_manual("start").accepted
    twin = LadderTwin()
    mismatches = []
    for n in range(1, steps + 1):
        image = plant.read_sensors()
        cmds = ctrl.step(image, DT)
        native = (cmds.upper is GateCmd.OPEN, cmds.lower is GateCmd.OPEN)
        ladder = twin.step(image, DT)
        if native != ladder:
            mismatches.append((n, native, ladder))
        plant.sim_step(cmds, DT)
    return ctrl, mismatches


def test_asset_parses_clean():
    program = load_program()
    assert len(program.rungs) == 6
    assert program.timer_presets == {
        "t_upper_window": 12000,
        "t_lower_wait": 20000,
        "t_dis": 4000,
    }


def test_ten_nominal_cycles_scan_for_scan():
    ctrl, mismatches = run_both(PlantSim(), 4800)
    assert mismatches == []
    assert ctrl.alarms == set()


def test_over_temp_trip_matches():
    # Hot enough material that the upper throat passes the limit
    # partway through the first fill.
    plant = PlantSim(PlantConfig(material_temp_c=600.0))
    ctrl, mismatches = run_both(plant, 960)
    assert mismatches == []
    assert Alarm.TEMP_ALARM in ctrl.alarms


def test_lost_reading_trip_matches():
    plant = PlantSim()
    plant.inject_fault(
        FaultSpec(FaultKind.THERMOCOUPLE_OPEN, sensor="lower", t_ms=30_000)
    )
    ctrl, mismatches = run_both(plant, 1920)
    assert mismatches == []
    assert Alarm.SENSOR_FAULT in ctrl.alarms
