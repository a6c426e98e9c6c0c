"""
Step-time tools: average iteration time, time to first token, time per output
token and decode throughput.

Every tool computes a per-rank value first and averages across ranks afterwards,
so per-rank clock offsets never matter.
"""

import numpy as np

from tracekit.card.schema import WorkloadCard
from tracekit.errors import MissingDecode, MissingPrefill, ZeroDenominator
from tracekit.metrics.base import Direction, Measurement, MetricContext, measured_steps, step_kind
from tracekit.metrics.registry import register_metric
from tracekit.trace.model import NormalizedTrace, StepKind
from tracekit.utils.time import ns_to_seconds


def mean_step_seconds(
    card: WorkloadCard, trace: NormalizedTrace, drop_edge_steps: bool = False
) -> tuple[float, dict[int, float]]:
    """
    Mean steady-state window duration, per rank and across ranks.

    Raises:
        NoStepWindows: A rank has no window of the steady-state kind
    """
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        windows = measured_steps(card, timeline)
        if drop_edge_steps and len(windows) >= 3:
            windows = windows[1:-1]
        per_rank[timeline.rank] = ns_to_seconds(float(np.mean([w.duration for w in windows])))
    return float(np.mean(list(per_rank.values()))), per_rank


@register_metric("avg_step_time", unit="s", direction=Direction.LOWER_BETTER)
def avg_step_time(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    drop = ctx.options.drop_edge_steps
    value, per_rank = mean_step_seconds(card, trace, drop_edge_steps=drop)
    return Measurement(value, per_rank, {"step_kind": str(step_kind(card)), "drop_edge_steps": drop})


@register_metric("ttft", unit="s", direction=Direction.LOWER_BETTER, phases=["inference"])
def ttft(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        prefill = timeline.steps_of(StepKind.PREFILL)
        if not prefill:
            raise MissingPrefill(f"rank {timeline.rank} has no prefill window")
        per_rank[timeline.rank] = ns_to_seconds(prefill[0].duration)
    return Measurement(float(np.mean(list(per_rank.values()))), per_rank)


def _tpot(trace: NormalizedTrace) -> tuple[float, dict[int, float]]:
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        decode = timeline.steps_of(StepKind.DECODE_STEP)
        if not decode:
            raise MissingDecode(f"rank {timeline.rank} has no decode windows")
        per_rank[timeline.rank] = ns_to_seconds(float(np.mean([w.duration for w in decode])))
    return float(np.mean(list(per_rank.values()))), per_rank


@register_metric("tpot", unit="s", direction=Direction.LOWER_BETTER, phases=["inference"])
def tpot(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    value, per_rank = _tpot(trace)
    return Measurement(value, per_rank)


@register_metric("decode_throughput", unit="tokens/s", direction=Direction.HIGHER_BETTER, phases=["inference"])
def decode_throughput(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Batch size over mean decode-step latency: one token per sequence per step."""
    value, _ = _tpot(trace)
    if value <= 0:
        raise ZeroDenominator("mean decode step time is zero")
    return Measurement(card.data.batch_size / value, notes={"batch_size": card.data.batch_size})
