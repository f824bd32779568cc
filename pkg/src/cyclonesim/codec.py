"""MAX6675 frame codec and drop-shield geometry.

The temperature converter clocks out one 16-bit word per read:

    bit 15    dummy sign bit, always 0
    bits 14-3 temperature code, unsigned, 0.25 C per count
    bit 2     open-thermocouple flag
    bit 1     device id, always 0
    bit 0     tri-state marker, always 0

A code of 0..4095 therefore spans 0.0 to 1023.75 C. Decoding treats any
set reserved bit as a corrupt frame rather than guessing, and reports an
open thermocouple as a distinct fault so callers never mistake either
condition for a reading.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

LSB_C = 0.25
MAX_TEMP_C = 4095 * LSB_C

_DUMMY_BIT = 1 << 15
_OPEN_BIT = 1 << 2
_DEVICE_ID_BIT = 1 << 1
_TRISTATE_BIT = 1 << 0
_RESERVED_MASK = _DUMMY_BIT | _DEVICE_ID_BIT | _TRISTATE_BIT
_CODE_SHIFT = 3
_CODE_MASK = 0x0FFF


class TempFault(enum.Enum):
    """Non-reading outcomes of a frame decode."""

    OPEN_THERMOCOUPLE = "open_thermocouple"
    INVALID_FRAME = "invalid_frame"


def encode_max6675(temp_c: float, open_circuit: bool = False) -> int:
    """Build the 16-bit frame a healthy converter would emit for temp_c.

    With open_circuit the open flag is set and the code field is forced
    to 0; the device reports no meaningful temperature in that state.
    Raises ValueError for temperatures outside 0.0..1023.75 C.
    """
    if open_circuit:
        return _OPEN_BIT
    if math.isnan(temp_c) or not 0.0 <= temp_c <= MAX_TEMP_C:
        raise ValueError(f"temperature {temp_c!r} outside 0.0..{MAX_TEMP_C} C")
    code = math.floor(temp_c / LSB_C)
    return (code & _CODE_MASK) << _CODE_SHIFT


def decode_max6675(word: int) -> float | TempFault:
    """Decode one frame into a temperature or an explicit fault.

    Faults are returned, not raised: a bad frame is a normal runtime
    event for the caller. ValueError is reserved for words that are not
    16-bit values at all.
    """
    if not 0 <= word <= 0xFFFF:
        raise ValueError(f"frame {word!r} is not a 16-bit word")
    if word & _RESERVED_MASK:
        return TempFault.INVALID_FRAME
    if word & _OPEN_BIT:
        return TempFault.OPEN_THERMOCOUPLE
    return ((word >> _CODE_SHIFT) & _CODE_MASK) * LSB_C


@dataclass(frozen=True)
class ShieldGeometry:
    """Sheet-metal dimensions for the level-probe drop shield, in mm."""

    entry_mm: float
    side_mm: float
    partition_mm: float
    mouth_mm: float


def shield_dimensions(entry_mm: float) -> ShieldGeometry:
    """Derive shield plate dimensions from the material entry width.

    The side plate, partition, and mouth scale as 4/3, 3/4, and 2/3 of
    the entry width. Raises ValueError for a non-positive entry.
    """
    if math.isnan(entry_mm) or entry_mm <= 0.0:
        raise ValueError(f"entry width must be positive, got {entry_mm!r}")
    return ShieldGeometry(
        entry_mm=entry_mm,
        side_mm=entry_mm * 4.0 / 3.0,
        partition_mm=entry_mm * 3.0 / 4.0,
        mouth_mm=entry_mm * 2.0 / 3.0,
    )
