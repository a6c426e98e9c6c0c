from .intervals import IntervalSet, clip, intersect_len, intersection, restrict, subtract_len, union_of
from .time import ns_to_seconds, ps_to_ns, str_to_ns, us_to_ns

__all__ = [
    "IntervalSet",
    "clip",
    "intersect_len",
    "intersection",
    "restrict",
    "subtract_len",
    "union_of",
    "ns_to_seconds",
    "ps_to_ns",
    "str_to_ns",
    "us_to_ns",
]
