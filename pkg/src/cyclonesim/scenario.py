"""Declarative simulation scenarios.

A scenario is one TOML document pinning everything a run needs to be
reproducible: controller settings, plant parameters, a fault schedule,
a seed, and a duration.  The format is versioned and strict: unknown
keys are errors, not warnings, because a silently ignored misspelled
key ("temp_alarm = ..." for "temp_alarm_c") would fabricate results.

    version = 1
    name = "nominal"
    seed = 42
    duration_ms = 240000
    initial_mode = "AUTO"        # or "HALTED" (optional)

    [controller]                 # any ControllerConfig field
    level_automation = true

    [plant]                      # any PlantConfig field
    shield_installed = true

    [[faults]]                   # zero or more
    kind = "LEVEL_INTERFERENCE"  # FaultKind name
    rate = 0.2
    t_ms = 0
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .controller import ControllerConfig
from .plant import FaultKind, FaultSpec, PlantConfig, _validate as _validate_fault

__all__ = ["Scenario", "load_scenario", "parse_scenario_text"]

SCENARIO_VERSION = 1

_TOP_KEYS = {
    "version",
    "name",
    "seed",
    "duration_ms",
    "initial_mode",
    "controller",
    "plant",
    "faults",
}


@dataclass
class Scenario:
    name: str
    seed: int
    duration_ms: int
    controller: ControllerConfig = field(default_factory=ControllerConfig)
    plant: PlantConfig = field(default_factory=PlantConfig)
    faults: list[FaultSpec] = field(default_factory=list)
    initial_mode: str = "AUTO"


def _build_config(cls, table: dict, section: str):
    known = {f.name: f for f in dataclasses.fields(cls)}
    unknown = sorted(set(table) - set(known))
    if unknown:
        raise ValueError(f"[{section}] has unknown keys: {', '.join(unknown)}")
    table = dict(table)
    for key, value in table.items():
        want = known[key].type
        # TOML integers are fine where floats are expected, nothing else.
        if want == "float" and isinstance(value, int) and not isinstance(value, bool):
            value = table[key] = float(value)
        ok = {
            "int": lambda v: isinstance(v, int) and not isinstance(v, bool),
            "float": lambda v: isinstance(v, float),
            "bool": lambda v: isinstance(v, bool),
        }.get(want, lambda v: True)(value)
        if not ok:
            raise ValueError(f"[{section}] {key} must be {want}, got {value!r}")
    return cls(**table)


def _build_fault(table: dict, index: int) -> FaultSpec:
    table = dict(table)
    kind_name = table.pop("kind", None)
    try:
        kind = FaultKind[kind_name]
    except KeyError:
        raise ValueError(
            f"faults[{index}]: unknown fault kind {kind_name!r}"
        ) from None
    allowed = {f.name for f in dataclasses.fields(FaultSpec)} - {"kind"}
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ValueError(f"faults[{index}] has unknown keys: {', '.join(unknown)}")
    for key in ("factor", "rate"):
        if isinstance(table.get(key), int):
            table[key] = float(table[key])
    spec = FaultSpec(kind=kind, **table)
    try:
        _validate_fault(spec)
    except ValueError as exc:
        raise ValueError(f"faults[{index}]: {exc}") from None
    return spec


def parse_scenario_text(text: str) -> Scenario:
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ValueError(f"scenario is not valid TOML: {exc}") from None
    unknown = sorted(set(doc) - _TOP_KEYS)
    if unknown:
        raise ValueError(f"unknown scenario keys: {', '.join(unknown)}")
    version = doc.get("version")
    if version != SCENARIO_VERSION:
        raise ValueError(
            f"scenario version must be {SCENARIO_VERSION}, got {version!r}"
        )
    name = doc.get("name")
    if not isinstance(name, str) or not name:
        raise ValueError(f"name must be a non-empty string, got {name!r}")
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ValueError(f"seed must be an integer, got {seed!r}")
    duration = doc.get("duration_ms")
    if not isinstance(duration, int) or isinstance(duration, bool) or duration <= 0:
        raise ValueError(f"duration_ms must be a positive integer, got {duration!r}")
    initial_mode = doc.get("initial_mode", "AUTO")
    if initial_mode not in ("AUTO", "HALTED"):
        raise ValueError(
            f"initial_mode must be AUTO or HALTED, got {initial_mode!r}"
        )
    controller = _build_config(ControllerConfig, doc.get("controller", {}), "controller")
    plant = _build_config(PlantConfig, doc.get("plant", {}), "plant")
    raw_faults = doc.get("faults", [])
    faults = [_build_fault(entry, i) for i, entry in enumerate(raw_faults)]
    return Scenario(
        name=name,
        seed=seed,
        duration_ms=duration,
        controller=controller,
        plant=plant,
        faults=faults,
        initial_mode=initial_mode,
    )


def load_scenario(path: str | Path) -> Scenario:
    return parse_scenario_text(Path(path).read_text(encoding="utf-8"))
