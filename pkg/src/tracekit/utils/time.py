"""
Utility functions for timestamp handling in tracekit.

All timelines are kept in integer nanoseconds. Kineto traces report microseconds
(possibly fractional, e.g. ``1234.567``) and XLA device events report picoseconds,
so both are converted exactly through ``Decimal`` rather than floats.
"""

import re
from decimal import ROUND_HALF_UP, Decimal
from numbers import Number

NS_PER_US = 1000
PS_PER_NS = 1000
NS_PER_S = 1_000_000_000


def _as_decimal(value: Number | str | Decimal) -> Decimal:
    if isinstance(value, Decimal):
        return value
    if isinstance(value, float):
        # repr gives the shortest round-tripping form, i.e. what the JSON text said
        return Decimal(repr(value))
    return Decimal(value)


def us_to_ns(value: Number | str | Decimal) -> int:
    """
    Convert a microsecond timestamp to integer nanoseconds.

        Example:
            >>> us_to_ns(1000)
            1000000
            >>> us_to_ns("0.5")
            500
    """
    if isinstance(value, int):
        return value * NS_PER_US
    return int((_as_decimal(value) * NS_PER_US).to_integral_value(rounding=ROUND_HALF_UP))


def ps_to_ns(value: Number | str | Decimal) -> int:
    """
    Convert picoseconds to integer nanoseconds, rounding half up.
    """
    if isinstance(value, int):
        return (value + PS_PER_NS // 2) // PS_PER_NS
    return int((_as_decimal(value) / PS_PER_NS).to_integral_value(rounding=ROUND_HALF_UP))


def ns_to_seconds(ns: int | float) -> float:
    return ns / NS_PER_S


def str_to_ns(s: str) -> int:
    """
    Convert a duration string like '30us' or '1.5ms' to nanoseconds.
    """
    match = re.fullmatch(r"(\d+(?:\.\d+)?)(ns|us|ms|s)", s.strip())
    if not match:
        raise ValueError(f"Input string '{s}' is not in the expected format, e.g., '500ns', '5us', or '1.5ms'.")
    number, unit = match.groups()
    scale = {"ns": 1, "us": 1_000, "ms": 1_000_000, "s": NS_PER_S}[unit]
    return int((Decimal(number) * scale).to_integral_value(rounding=ROUND_HALF_UP))
