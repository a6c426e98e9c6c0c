# import order is catalog order; every module registers its tools on import
from tracekit.metrics import step  # noqa: I001
from tracekit.metrics import compute
from tracekit.metrics import memory
from tracekit.metrics import communication
from tracekit.metrics import utility
from tracekit.metrics.base import Direction, Measurement, MetricContext, MetricOptions, MetricResult
from tracekit.metrics.registry import METRIC_REGISTRY, MetricTool, get_metric, register_metric
from tracekit.metrics.suite import PerformanceProfile, SkippedMetric, load_profile, run_suite

__all__ = [
    "step",
    "compute",
    "memory",
    "communication",
    "utility",
    "Direction",
    "Measurement",
    "MetricContext",
    "MetricOptions",
    "MetricResult",
    "METRIC_REGISTRY",
    "MetricTool",
    "get_metric",
    "register_metric",
    "PerformanceProfile",
    "SkippedMetric",
    "load_profile",
    "run_suite",
]
