"""
Registry for metric tools.

Each tool registers under its catalog key with its unit, direction and an
applicability declaration (dialects, phases, MoE flag, minimum rank count). The
suite runner uses the declaration to skip tools without calling them; calling a
tool directly on evidence it does not apply to raises NotApplicable.

Example:
    Registering a tool:

    >>> @register_metric("avg_step_time", unit="s", direction=Direction.LOWER_BETTER)
    ... def avg_step_time(card, trace, ctx):
    ...     return Measurement(1.0)

    Using the registry:

    >>> tool = get_metric("avg_step_time")
    >>> tool(card, trace).value
    1.0
"""

import functools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable

from tracekit.card.schema import WorkloadCard
from tracekit.errors import NotApplicable
from tracekit.metrics.base import Direction, MetricContext, MetricResult
from tracekit.trace.model import Dialect, NormalizedTrace

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MetricTool:
    key: str
    func: Callable
    unit: str
    direction: Direction
    dialects: frozenset[Dialect] | None = None
    phases: frozenset[str] | None = None
    requires_moe: bool = False
    min_ranks: int = 1

    def why_not(self, card: WorkloadCard, trace: NormalizedTrace) -> str | None:
        """Reason the tool does not apply, or None when it does."""
        if self.dialects is not None and trace.dialect not in self.dialects:
            return f"not applicable to {trace.dialect} traces"
        if self.phases is not None and card.phase not in self.phases:
            return f"not applicable to {card.phase} workloads"
        if self.requires_moe and not card.is_moe:
            return "not applicable: workload card sets moe=false"
        if trace.num_ranks < self.min_ranks:
            return f"not applicable: needs at least {self.min_ranks} ranks, trace has {trace.num_ranks}"
        return None

    def __call__(self, card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext | None = None):
        return self.func(card, trace, ctx)


METRIC_REGISTRY: dict[str, MetricTool] = {}


def register_metric(
    key: str,
    unit: str,
    direction: Direction,
    dialects: Iterable[Dialect] | None = None,
    phases: Iterable[str] | None = None,
    requires_moe: bool = False,
    min_ranks: int = 1,
) -> Callable:
    """
    Decorator to register a metric tool under a catalog key.

    The decorated function receives ``(card, trace, ctx)`` with the trace already
    relabelled for the card's phase, and returns a ``Measurement`` (wrapped into a
    MetricResult carrying this key, unit and direction) or a list of finished
    MetricResults for multi-key tools.
    """

    def decorator(func):
        tool_info = dict(
            key=key,
            unit=unit,
            direction=direction,
            dialects=None if dialects is None else frozenset(dialects),
            phases=None if phases is None else frozenset(phases),
            requires_moe=requires_moe,
            min_ranks=min_ranks,
        )

        @functools.wraps(func)
        def wrapper(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext | None = None):
            reason = METRIC_REGISTRY[key].why_not(card, trace)
            if reason is not None:
                raise NotApplicable(reason)
            ctx = ctx or MetricContext()
            trace = trace.relabel_steps(card.phase, first_is_prefill=card.first_step_is_prefill)
            measured = func(card, trace, ctx)
            if isinstance(measured, list):
                return measured
            if not math.isfinite(measured.value):
                raise NotApplicable(f"{key} is not finite for this evidence")
            return MetricResult(key, float(measured.value), unit, direction, measured.per_rank, measured.notes)

        METRIC_REGISTRY[key] = MetricTool(func=wrapper, **tool_info)
        return wrapper

    return decorator


def get_metric(key: str) -> MetricTool:
    """
    Look up a registered tool.

    Raises:
        ValueError: If the key is not registered.
    """
    if key not in METRIC_REGISTRY:
        available = list(METRIC_REGISTRY.keys())
        raise ValueError(f"Metric '{key}' is not registered. Available metrics: {available}")
    return METRIC_REGISTRY[key]
