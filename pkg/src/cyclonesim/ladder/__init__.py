"""Ladder logic engine: text format, validation, and scan evaluation."""

from .ast import (
    COMPARE_OPS,
    Compare,
    Contact,
    Element,
    LadderProgram,
    OrGroup,
    Rung,
    TargetKind,
    TimerOn,
    VarType,
)
from .interpreter import ScanImage, TimerState, initial_image, run_trace, scan
from .parser import Diagnostic, ParseResult, parse_ladder, to_source, validate

__all__ = [
    "COMPARE_OPS",
    "Compare",
    "Contact",
    "Diagnostic",
    "Element",
    "LadderProgram",
    "OrGroup",
    "ParseResult",
    "Rung",
    "ScanImage",
    "TargetKind",
    "TimerOn",
    "TimerState",
    "VarType",
    "initial_image",
    "parse_ladder",
    "run_trace",
    "scan",
    "to_source",
    "validate",
]
