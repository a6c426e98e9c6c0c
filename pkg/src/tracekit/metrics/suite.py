"""
Suite runner: apply every registered tool to one (card, trace) pair.

Tools run in registry order. A tool that does not apply, or fails on this evidence,
lands in ``skipped`` with its reason instead of aborting the run.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from tracekit.card.schema import WorkloadCard
from tracekit.errors import EmptyRegistry, MetricError
from tracekit.metrics.base import Measurement, MetricContext, MetricResult
from tracekit.metrics.registry import METRIC_REGISTRY, MetricTool
from tracekit.trace.model import NormalizedTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SkippedMetric:
    key: str
    reason: str


@dataclass(frozen=True)
class PerformanceProfile:
    entries: tuple[MetricResult, ...]
    skipped: tuple[SkippedMetric, ...] = ()
    workload_card_ref: str = ""
    dialect: str = ""
    trace_kinds: tuple[str, ...] | None = None
    notes: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        keys = [e.key for e in self.entries]
        if len(keys) != len(set(keys)):
            raise ValueError(f"duplicate metric keys in profile: {keys}")

    def get(self, key: str) -> MetricResult | None:
        for entry in self.entries:
            if entry.key == key:
                return entry
        return None

    def values(self) -> dict[str, float]:
        return {e.key: e.value for e in self.entries}

    def to_dict(self) -> dict:
        return {
            "workload_card_ref": self.workload_card_ref,
            "dialect": self.dialect,
            "trace_kinds": None if self.trace_kinds is None else list(self.trace_kinds),
            "metrics": [e.to_dict() for e in self.entries],
            "skipped": [{"key": s.key, "reason": s.reason} for s in self.skipped],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceProfile":
        kinds = data.get("trace_kinds")
        return cls(
            entries=tuple(MetricResult.from_dict(m) for m in data.get("metrics", [])),
            skipped=tuple(SkippedMetric(s["key"], s["reason"]) for s in data.get("skipped", [])),
            workload_card_ref=data.get("workload_card_ref", ""),
            dialect=data.get("dialect", ""),
            trace_kinds=None if kinds is None else tuple(kinds),
        )


def load_profile(path: str | Path) -> PerformanceProfile:
    with open(path) as f:
        return PerformanceProfile.from_dict(json.load(f))


def run_suite(
    card: WorkloadCard,
    trace: NormalizedTrace,
    registry: Mapping[str, MetricTool] | None = None,
    ctx: MetricContext | None = None,
    only: Iterable[str] | None = None,
) -> PerformanceProfile:
    """
    Compute the performance profile of one piece of evidence.

    Args:
        card: Workload card
        trace: Normalized trace
        registry: Tools to apply, defaults to every registered tool
        ctx: Peaks, patterns and options shared by all tools
        only: Restrict the run to these keys (registry order is kept)

    Raises:
        EmptyRegistry: No tool to apply
        ValueError: ``only`` names an unregistered key
    """
    registry = METRIC_REGISTRY if registry is None else registry
    if not registry:
        raise EmptyRegistry("metric registry is empty")
    ctx = ctx or MetricContext()
    tools = list(registry.values())
    if only is not None:
        wanted = list(only)
        unknown = [k for k in wanted if k not in registry]
        if unknown:
            raise ValueError(f"Metrics {unknown} are not registered. Available metrics: {list(registry)}")
        tools = [t for t in tools if t.key in wanted]

    trace = trace.relabel_steps(card.phase, first_is_prefill=card.first_step_is_prefill)
    entries: list[MetricResult] = []
    skipped: list[SkippedMetric] = []
    for tool in tools:
        reason = tool.why_not(card, trace)
        if reason is not None:
            skipped.append(SkippedMetric(tool.key, reason))
            continue
        try:
            result = tool(card, trace, ctx)
        except MetricError as e:
            logger.info("Skipping %s: %s", tool.key, e.reason)
            skipped.append(SkippedMetric(tool.key, f"{type(e).__name__}: {e.reason}"))
            continue
        except Exception as e:
            logger.exception("Metric tool %s failed", tool.key)
            skipped.append(SkippedMetric(tool.key, f"{type(e).__name__}: {e}"))
            continue
        if isinstance(result, Measurement):
            result = MetricResult(tool.key, float(result.value), tool.unit, tool.direction, result.per_rank,
                                  result.notes)
        if isinstance(result, list):
            entries.extend(result)
        else:
            entries.append(result)

    logger.info("Suite produced %d metrics, skipped %d", len(entries), len(skipped))
    return PerformanceProfile(
        tuple(entries),
        tuple(skipped),
        workload_card_ref=card.ref,
        dialect=str(trace.dialect),
        trace_kinds=card.metric_source.traces,
    )
