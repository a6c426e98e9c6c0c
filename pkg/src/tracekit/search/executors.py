"""
Executors turn a proposed configuration into measured metrics, or a failure.

Failures are data: an executor never raises for a configuration it cannot run,
it returns an outcome carrying the reason.

Example:
    >>> executor = get_executor("table", path="tests/fixtures/search/megatron_table.yaml")
    >>> executor.execute({"tp": 4, "dp": 1, "pp": 4}).metrics
    {'avg_step_time': 0.44}
"""

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Type

import yaml

from tracekit.errors import SearchConfigError
from tracekit.metrics.base import Direction, MetricResult
from tracekit.metrics.registry import METRIC_REGISTRY
from tracekit.metrics.suite import PerformanceProfile
from tracekit.sim.graph import ExecutionGraph, load_graph
from tracekit.sim.network import NetworkConfig
from tracekit.sim.replay import ReplayMode, replay

logger = logging.getLogger(__name__)

PARALLELISM_KEYS = ("tp", "dp", "pp", "cp")


@dataclass(frozen=True)
class ExecutionOutcome:
    """Metrics of one executed config, or the reason it could not run."""

    metrics: dict[str, float] = field(default_factory=dict)
    devices: int | None = None
    failure: str | None = None
    profile: PerformanceProfile | None = field(default=None, compare=False)

    @property
    def succeeded(self) -> bool:
        return self.failure is None

    @classmethod
    def failed(cls, reason: str) -> "ExecutionOutcome":
        return cls(failure=reason)

    @classmethod
    def from_profile(cls, profile: PerformanceProfile, devices: int | None = None) -> "ExecutionOutcome":
        return cls(profile.values(), devices, profile=profile)

    @classmethod
    def measured(cls, metrics: dict[str, float], devices: int | None, source: str) -> "ExecutionOutcome":
        """Wrap raw metric values into a profile; units and directions come from the metric registry."""
        entries = []
        for key, value in metrics.items():
            tool = METRIC_REGISTRY.get(key)
            unit, direction = (tool.unit, tool.direction) if tool else ("", Direction.LOWER_BETTER)
            entries.append(MetricResult(key, float(value), unit, direction, notes={"source": source}))
        return cls.from_profile(PerformanceProfile(tuple(entries), dialect=source), devices)


def device_count(config: dict) -> int:
    """Product of the parallelism degrees present in a config."""
    n = 1
    for key in PARALLELISM_KEYS:
        value = config.get(key)
        if isinstance(value, int) and not isinstance(value, bool):
            n *= value
    return n


class Executor:
    """Base class: subclasses implement ``execute``."""

    def execute(self, config: dict) -> ExecutionOutcome:
        raise NotImplementedError("execute not implemented")


EXECUTOR_REGISTRY: dict[str, Type[Executor]] = {}


def register_executor(name):
    """Decorator to register an executor class under a name."""

    def decorator(cls):
        EXECUTOR_REGISTRY[name] = cls
        return cls

    return decorator


def get_executor(name, **kwargs) -> Executor:
    """
    Instantiate a registered executor.

    Raises:
        ValueError: If the executor name is not found in the registry.
    """
    if name not in EXECUTOR_REGISTRY:
        available = list(EXECUTOR_REGISTRY.keys())
        raise ValueError(f"Executor '{name}' is not registered. Available executors: {available}")
    return EXECUTOR_REGISTRY[name](**kwargs)


def _table_key(config: dict) -> tuple:
    return tuple(sorted(config.items()))


@register_executor("table")
class TableExecutor(Executor):
    """
    Replays committed measurements.

    Each entry holds a ``config`` plus either ``step_time`` (seconds), a ``metrics``
    mapping, or a ``failure`` reason; ``devices`` is optional. Configs absent from
    the table fail as ``Unmeasured``.
    """

    def __init__(self, entries: list[dict] | None = None, path: str | Path | None = None):
        if path is not None:
            with open(path) as f:
                data = yaml.safe_load(f) or {}
            entries = data.get("entries", []) if isinstance(data, dict) else data
        if entries is None:
            raise SearchConfigError("TableExecutor needs entries or a path")
        self._table: dict[tuple, ExecutionOutcome] = {}
        for entry in entries:
            if "config" not in entry:
                raise SearchConfigError(f"table entry without a config: {entry}")
            metrics = dict(entry.get("metrics", {}))
            if "step_time" in entry:
                metrics["avg_step_time"] = float(entry["step_time"])
            failure = entry.get("failure")
            if failure is None and not metrics:
                raise SearchConfigError(f"table entry {entry['config']} has neither metrics nor a failure")
            if failure is None:
                outcome = ExecutionOutcome.measured(metrics, entry.get("devices"), "table")
            else:
                outcome = ExecutionOutcome(devices=entry.get("devices"), failure=str(failure))
            self._table[_table_key(entry["config"])] = outcome
        logger.info("Loaded %d table entries", len(self._table))

    def execute(self, config: dict) -> ExecutionOutcome:
        return self._table.get(_table_key(config), ExecutionOutcome.failed("Unmeasured"))


@register_executor("sim")
class SimExecutor(Executor):
    """
    Step time of a graph template under parallelism and network knobs.

    The template is one step at tp = dp = pp = 1. For a config, compute durations are
    divided by ``tp * dp * pp`` and stretched by the pipeline bubble
    ``1 + (pp - 1) / microbatches``; collective bytes grow with ``tp``. Network keys
    (``scale_up_bandwidth``, ``scale_out_bandwidth``, ``scale_up_domain_size``)
    override the base NetworkConfig. The graph is replayed in Modeled mode.
    """

    NETWORK_KEYS = ("scale_up_bandwidth", "scale_out_bandwidth", "scale_up_domain_size")

    def __init__(
        self,
        graph: ExecutionGraph | str | Path,
        net: NetworkConfig | str | Path,
        microbatches: int = 8,
    ):
        self.graph = graph if isinstance(graph, ExecutionGraph) else load_graph(graph)
        self.net = net if isinstance(net, NetworkConfig) else NetworkConfig.from_json(net)
        if microbatches < 1:
            raise SearchConfigError("microbatches must be >= 1")
        self.microbatches = microbatches

    def execute(self, config: dict) -> ExecutionOutcome:
        unknown = sorted(set(config) - set(PARALLELISM_KEYS) - set(self.NETWORK_KEYS))
        if unknown:
            return ExecutionOutcome.failed(f"UnsupportedKnob: {unknown}")
        tp, dp, pp = (int(config.get(k, 1)) for k in ("tp", "dp", "pp"))
        if min(tp, dp, pp) < 1:
            return ExecutionOutcome.failed("InvalidParallelism")
        compute_factor = (1 + (pp - 1) / self.microbatches) / (tp * dp * pp)
        graph = self.graph.scaled(compute_factor=compute_factor, comm_bytes_factor=tp)
        try:
            net = NetworkConfig(**{**self.net.to_dict(), **{k: config[k] for k in self.NETWORK_KEYS if k in config}})
        except ValueError as e:
            return ExecutionOutcome.failed(f"InvalidNetwork: {e}")
        step_time = replay(graph, net, ReplayMode.MODELED).step_time
        if not math.isfinite(step_time):
            return ExecutionOutcome.failed("NonFiniteStepTime")
        return ExecutionOutcome.measured({"avg_step_time": step_time}, device_count(config), "sim")
