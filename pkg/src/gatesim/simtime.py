"""Fixed-point simulated time.

Time is a signed 64-bit count of picoseconds (10^12 ticks per second).
Integer ticks keep trace-equivalence tests exact: there is no float drift,
and printing/parsing round-trips bit-for-bit.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering

from .errors import SimTimeOverflow, TimeParseError, UnknownUnit

#: Ticks per simulated second (picosecond resolution).
RESOLUTION = 10 ** 12

_MAX_TICKS = 2 ** 63 - 1
_MIN_TICKS = -(2 ** 63 - 1)

# Decimal exponent of one unit, relative to a second.
_UNIT_EXP = {"s": 0, "ms": 3, "us": 6, "ns": 9, "ps": 12}

_TIME_RE = re.compile(r"^([+-]?)(\d+)(?:\.(\d+))?(s|ms|us|ns|ps)$")
_DECIMAL_RE = re.compile(r"^([+-]?)(\d+)(?:\.(\d+))?$")


def _checked(ticks: int) -> int:
    if not (_MIN_TICKS <= ticks <= _MAX_TICKS):
        raise SimTimeOverflow(f"tick count {ticks} outside signed 64-bit range")
    return ticks


def _digits_to_ticks(sign: str, whole: str, frac: str, unit_exp: int) -> int:
    digits = int(whole + frac)
    exp = 12 - unit_exp - len(frac)
    if exp >= 0:
        ticks = digits * 10 ** exp
    else:
        scale = 10 ** (-exp)
        if digits % scale:
            raise TimeParseError(
                f"'{whole}.{frac}' has sub-picosecond precision")
        ticks = digits // scale
    if sign == "-":
        ticks = -ticks
    return _checked(ticks)


@total_ordering
@dataclass(frozen=True, slots=True)
class SimTime:
    """An instant or duration on the simulated clock, in integer ticks."""

    ticks: int = 0

    def __post_init__(self):
        _checked(self.ticks)

    # -- constructors ---------------------------------------------------

    @classmethod
    def seconds(cls, n: int) -> "SimTime":
        return cls(_checked(n * RESOLUTION))

    @classmethod
    def millis(cls, n: int) -> "SimTime":
        return cls(_checked(n * 10 ** 9))

    @classmethod
    def micros(cls, n: int) -> "SimTime":
        return cls(_checked(n * 10 ** 6))

    @classmethod
    def nanos(cls, n: int) -> "SimTime":
        return cls(_checked(n * 10 ** 3))

    @classmethod
    def picos(cls, n: int) -> "SimTime":
        return cls(_checked(n))

    @classmethod
    def parse(cls, text: str) -> "SimTime":
        """Parse a time literal with a required unit, e.g. '100ms', '0.1s'.

        Raises UnknownUnit when the unit is missing or not one of
        s/ms/us/ns/ps, and TimeParseError when the value does not fit the
        picosecond grid exactly.
        """
        text = text.strip()
        m = _TIME_RE.match(text)
        if m is None:
            if _DECIMAL_RE.match(text):
                raise UnknownUnit(
                    f"time '{text}' needs a unit (s, ms, us, ns, ps)")
            raise TimeParseError(f"malformed time literal '{text}'")
        sign, whole, frac, unit = m.groups()
        return cls(_digits_to_ticks(sign, whole, frac or "", _UNIT_EXP[unit]))

    @classmethod
    def from_decimal(cls, text: str) -> "SimTime":
        """Parse a bare decimal-seconds string, as used in event logs."""
        m = _DECIMAL_RE.match(text.strip())
        if m is None:
            raise TimeParseError(f"malformed decimal seconds '{text}'")
        sign, whole, frac = m.groups()
        return cls(_digits_to_ticks(sign, whole, frac or "", 0))

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other: "SimTime") -> "SimTime":
        if not isinstance(other, SimTime):
            return NotImplemented
        return SimTime(_checked(self.ticks + other.ticks))

    def __sub__(self, other: "SimTime") -> "SimTime":
        if not isinstance(other, SimTime):
            return NotImplemented
        return SimTime(_checked(self.ticks - other.ticks))

    def __mul__(self, factor: int) -> "SimTime":
        if not isinstance(factor, int):
            return NotImplemented
        return SimTime(_checked(self.ticks * factor))

    __rmul__ = __mul__

    def __lt__(self, other: "SimTime") -> bool:
        if not isinstance(other, SimTime):
            return NotImplemented
        return self.ticks < other.ticks

    def __bool__(self) -> bool:
        return self.ticks != 0

    # -- formatting -------------------------------------------------------

    def to_decimal(self) -> str:
        """Exact decimal seconds, always with a fractional part ('1.0')."""
        ticks = self.ticks
        sign = "-" if ticks < 0 else ""
        whole, frac = divmod(abs(ticks), RESOLUTION)
        if frac == 0:
            return f"{sign}{whole}.0"
        return f"{sign}{whole}.{f'{frac:012d}'.rstrip('0')}"

    def __str__(self) -> str:
        return self.to_decimal() + "s"

    def __repr__(self) -> str:
        return f"SimTime('{self}')"


ZERO = SimTime(0)
MAX_TIME = SimTime(_MAX_TICKS)

# Bit rate suffixes for connection datarate literals (bits per second).
_RATE_RE = re.compile(r"^(\d+)(bps|kbps|Mbps|Gbps)?$")
_RATE_SCALE = {None: 1, "bps": 1, "kbps": 10 ** 3, "Mbps": 10 ** 6,
               "Gbps": 10 ** 9}


def parse_datarate(text: str) -> int:
    """Parse a datarate literal like '10Mbps' or a plain bits-per-second int."""
    m = _RATE_RE.match(text.strip())
    if m is None:
        raise UnknownUnit(f"malformed datarate '{text}'")
    value = int(m.group(1)) * _RATE_SCALE[m.group(2)]
    if value <= 0:
        raise TimeParseError(f"datarate must be positive, got '{text}'")
    return value


def transmission_ticks(byte_length: int, datarate: int) -> int:
    """Serialization delay of a message on a rate-limited link, in ticks.

    Rounds up: a partially used tick still occupies the link.
    """
    bits = byte_length * 8
    return -(-bits * RESOLUTION // datarate)
