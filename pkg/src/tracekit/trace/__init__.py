from tracekit.trace.base import TraceParser
from tracekit.trace.kineto import KinetoParser, parse_kineto
from tracekit.trace.loader import detect_dialect, load_trace
from tracekit.trace.model import (
    KERNEL_CLASSES,
    ClockNote,
    CollectiveKind,
    Dialect,
    EventClass,
    NormalizedTrace,
    RankTimeline,
    StepKind,
    StepWindow,
    TraceEvent,
)
from tracekit.trace.patterns import ClassificationPatterns, load_patterns
from tracekit.trace.registry import DIALECT_REGISTRY, get_parser, register_dialect
from tracekit.trace.xla import XlaParser, parse_xla

__all__ = [
    "KERNEL_CLASSES",
    "DIALECT_REGISTRY",
    "ClassificationPatterns",
    "ClockNote",
    "CollectiveKind",
    "Dialect",
    "EventClass",
    "KinetoParser",
    "NormalizedTrace",
    "RankTimeline",
    "StepKind",
    "StepWindow",
    "TraceEvent",
    "TraceParser",
    "XlaParser",
    "detect_dialect",
    "get_parser",
    "load_patterns",
    "load_trace",
    "parse_kineto",
    "parse_xla",
    "register_dialect",
]
