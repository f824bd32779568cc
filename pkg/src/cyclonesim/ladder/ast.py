"""Ladder program structure.

A program is a flat list of rungs over three kinds of named objects:
BOOL variables, REAL variables, and on-delay timers. Each rung is a
series network of elements feeding exactly one output write. Rungs are
evaluated top to bottom each scan; a write made by rung k is visible to
rung k+1 in the same scan, which is what makes seal-in patterns work.

Node classes carry no source locations so that a parsed program and a
programmatically built one compare equal structurally.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Union


class VarType(enum.Enum):
    BOOL = "BOOL"
    REAL = "REAL"


class TargetKind(enum.Enum):
    COIL = "COIL"
    SET = "SET"
    RESET = "RESET"


@dataclass(frozen=True)
class Contact:
    """Normally-open (negated=False) or normally-closed contact.

    May reference a BOOL variable or a timer, in which case it reads the
    timer's done flag.
    """

    name: str
    negated: bool = False


@dataclass(frozen=True)
class Compare:
    """Continuity iff the REAL variable compares true against a constant."""

    name: str
    op: str  # one of "<", "<=", ">", ">="
    value: float


@dataclass(frozen=True)
class TimerOn:
    """On-delay timer block: accumulates while its input is true.

    Output continuity is the timer's done flag. Each timer instance may
    be driven by at most one TimerOn element in the program.
    """

    name: str


@dataclass(frozen=True)
class OrGroup:
    """Parallel branches; continuity if any branch conducts.

    Every branch is evaluated every scan regardless of outcome so that
    timers inside non-conducting branches still see their input go false.
    """

    branches: tuple[tuple["Element", ...], ...]


Element = Union[Contact, Compare, TimerOn, OrGroup]

COMPARE_OPS = ("<", "<=", ">", ">=")


@dataclass(frozen=True)
class Rung:
    elements: tuple[Element, ...]
    target_kind: TargetKind
    target: str


@dataclass(frozen=True)
class LadderProgram:
    variables: dict[str, VarType] = field(default_factory=dict)
    timer_presets: dict[str, int] = field(default_factory=dict)  # milliseconds
    rungs: tuple[Rung, ...] = ()
