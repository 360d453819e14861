"""Time helpers: the simulated clock counts integer picosecond ticks."""

TICKS_PER_SECOND = 10 ** 12


def seconds(n: int) -> int:
    return n * TICKS_PER_SECOND


def millis(n: int) -> int:
    return n * 10 ** 9


def micros(n: int) -> int:
    return n * 10 ** 6


def nanos(n: int) -> int:
    return n * 10 ** 3


def picos(n: int) -> int:
    return n
