"""Scan-cycle evaluation of ladder programs.

One scan latches nothing by itself: callers set input variables on the
image between scans, and scan() evaluates every rung top to bottom
against a working copy, so writes from earlier rungs are visible to
later ones but the caller's inputs never change mid-scan. Timers
advance by the scan period dt each time their rung-input is true and
reset to zero the scan it goes false.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable

from .ast import (
    Compare,
    Contact,
    LadderProgram,
    OrGroup,
    Rung,
    TargetKind,
    TimerOn,
    VarType,
)

Value = "bool | float"


@dataclass(frozen=True)
class TimerState:
    elapsed_ms: int = 0
    done: bool = False


@dataclass
class ScanImage:
    """Complete variable and timer state between two scans."""

    values: dict[str, bool | float] = field(default_factory=dict)
    timers: dict[str, TimerState] = field(default_factory=dict)


def initial_image(program: LadderProgram) -> ScanImage:
    values: dict[str, bool | float] = {}
    for name, var_type in program.variables.items():
        values[name] = False if var_type is VarType.BOOL else 0.0
    timers = {name: TimerState() for name in program.timer_presets}
    return ScanImage(values, timers)


_OPS = {
    "<": lambda a, b: a < b,
    "<=": lambda a, b: a <= b,
    ">": lambda a, b: a > b,
    ">=": lambda a, b: a >= b,
}


def scan(program: LadderProgram, image: ScanImage, dt_ms: int) -> ScanImage:
    """Run one scan and return the new image; the input is untouched."""
    if dt_ms <= 0:
        raise ValueError(f"scan period must be positive, got {dt_ms}")
    values = dict(image.values)
    timers = dict(image.timers)

    def eval_series(elements, entry: bool) -> bool:
        cont = entry
        for el in elements:
            if isinstance(el, Contact):
                if el.name in timers:
                    v = timers[el.name].done
                else:
                    v = bool(values[el.name])
                hit = (not v) if el.negated else v
                cont = cont and hit
            elif isinstance(el, Compare):
                cont = cont and _OPS[el.op](values[el.name], el.value)
            elif isinstance(el, TimerOn):
                preset = program.timer_presets[el.name]
                prev = timers[el.name]
                elapsed = min(preset, prev.elapsed_ms + dt_ms) if cont else 0
                state = TimerState(elapsed, elapsed == preset)
                timers[el.name] = state
                cont = state.done
            elif isinstance(el, OrGroup):
                hit = False
                for branch in el.branches:
                    # No short-circuit: timers in dead branches must reset.
                    hit = eval_series(branch, cont) or hit
                cont = hit
            else:
                raise TypeError(f"unknown element {el!r}")
        return cont

    for rung in program.rungs:
        cont = eval_series(rung.elements, True)
        if rung.target_kind is TargetKind.COIL:
            values[rung.target] = cont
        elif rung.target_kind is TargetKind.SET:
            if cont:
                values[rung.target] = True
        elif cont:
            values[rung.target] = False
    return ScanImage(values, timers)


def run_trace(
    program: LadderProgram,
    schedule: Iterable[tuple[int, str, bool | float]],
    duration_ms: int,
    dt_ms: int,
) -> list[ScanImage]:
    """Scan for duration_ms, applying scheduled input writes.

    Ticks run at t = 0, dt, 2*dt, ...; an event (t_ms, name, value) is
    applied before the first tick whose time is >= t_ms, so inputs are
    latched at tick start. Returns the image after every scan. dt_ms
    must divide duration_ms evenly.
    """
    if dt_ms <= 0:
        raise ValueError(f"scan period must be positive, got {dt_ms}")
    if duration_ms < 0 or duration_ms % dt_ms != 0:
        raise ValueError(
            f"duration {duration_ms} ms is not a multiple of dt {dt_ms} ms"
        )
    events = sorted(schedule, key=lambda ev: ev[0])
    for t_ms, name, value in events:
        if t_ms < 0:
            raise ValueError(f"schedule time must be >= 0, got {t_ms}")
        var_type = program.variables.get(name)
        if var_type is None:
            raise ValueError(f"schedule references unknown variable {name!r}")
        if var_type is VarType.BOOL and not isinstance(value, bool):
            raise ValueError(f"variable {name!r} takes a bool, got {value!r}")
        if var_type is VarType.REAL and (
            isinstance(value, bool) or not isinstance(value, (int, float))
        ):
            raise ValueError(f"variable {name!r} takes a number, got {value!r}")

    image = initial_image(program)
    trace = []
    next_event = 0
    for tick in range(duration_ms // dt_ms):
        now = tick * dt_ms
        while next_event < len(events) and events[next_event][0] <= now:
            _, name, value = events[next_event]
            image.values[name] = value
            next_event += 1
        image = scan(program, image, dt_ms)
        trace.append(image)
    return trace
