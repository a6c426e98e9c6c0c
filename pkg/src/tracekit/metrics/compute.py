"""
Compute-side tools: MFU, SM coverage and boundedness, kernel concentration, MoE
share and cross-rank load imbalance.
"""

import logging

import numpy as np
import polars as pl

from tracekit.card.schema import WorkloadCard
from tracekit.config import COMPUTE_BOUND_MIN_DURATION_NS, COMPUTE_BOUND_OCCUPANCY, MEMORY_BOUND_OCCUPANCY
from tracekit.errors import (
    MissingArchField,
    NoFlopsEvents,
    NoKernelEvents,
    NotApplicable,
    ZeroActiveRank,
    ZeroDenominator,
)
from tracekit.metrics import polars_extensions  # noqa: F401 # registers the "trace" namespace
from tracekit.metrics.base import Direction, Measurement, MetricContext
from tracekit.metrics.registry import register_metric
from tracekit.metrics.step import mean_step_seconds
from tracekit.trace.model import Dialect, NormalizedTrace
from tracekit.utils.intervals import union_of
from tracekit.utils.time import ns_to_seconds

logger = logging.getLogger(__name__)

GPU_ONLY = [Dialect.KINETO_GPU]


def _arch_field(card: WorkloadCard, name: str) -> int:
    value = getattr(card.arch, name)
    if value is None:
        raise MissingArchField(f"workload.model.model_arch.{name}")
    return value


def token_flops(
    n_active: int, n_embedding: int, num_layers: int, head_dim: int, num_heads: int, seq_len: int, training: bool
) -> float:
    """
    Per-token model FLOPs.

    Training counts forward and backward passes (6 per dense parameter, 12 for the
    attention score term); inference counts the forward pass only (2 and 4).
    """
    dense = n_active - n_embedding
    attention = num_layers * head_dim * num_heads * seq_len
    if training:
        return float(6 * dense + 12 * attention)
    return float(2 * dense + 4 * attention)


def model_flops_utilization(
    f_token: float, batch_size: int, seq_len: int, step_seconds: float, f_peak: float, devices: int
) -> float:
    """Observed model FLOP/s over aggregate peak FLOP/s, in percent."""
    observed = f_token * batch_size * seq_len / step_seconds
    return observed / (f_peak * devices) * 100


def _gpu_mfu(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext, f_peak: float) -> Measurement:
    n_active = card.arch.num_params_active
    if n_active is None:
        n_active = _arch_field(card, "num_params")
    f_token = token_flops(
        n_active,
        _arch_field(card, "num_params_embedding"),
        _arch_field(card, "num_layers"),
        _arch_field(card, "head_dim"),
        _arch_field(card, "num_heads"),
        card.data.seq_len,
        training=card.is_training,
    )
    step_s, _ = mean_step_seconds(card, trace, drop_edge_steps=ctx.options.drop_edge_steps)
    if step_s <= 0:
        raise ZeroDenominator("mean step time is zero")
    value = model_flops_utilization(
        f_token, card.data.batch_size, card.data.seq_len, step_s, f_peak, card.xpu.total_count
    )
    return Measurement(value, notes={"f_token": f_token, "step_time_s": step_s})


def _tpu_mfu(card: WorkloadCard, trace: NormalizedTrace, f_peak: float) -> Measurement:
    rates: dict[int, float] = {}
    for timeline in trace.ranks:
        carrying = [e for e in timeline.events if e.model_flops is not None and e.model_flops > 0]
        active_ns = union_of((e.t_start, e.t_end) for e in carrying).length
        if not carrying or active_ns == 0:
            continue
        rates[timeline.rank] = sum(e.model_flops for e in carrying) / ns_to_seconds(active_ns)
    if not rates:
        raise NoFlopsEvents("no device events carry positive model_flops")
    observed = float(np.mean(list(rates.values())))
    value = observed / (f_peak * card.xpu.total_count) * 100
    return Measurement(value, notes={"observed_flops_per_s": observed})


@register_metric("mfu", unit="%", direction=Direction.HIGHER_BETTER)
def mfu(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """
    Model FLOPs utilization. GPU traces estimate FLOPs from the card's architecture;
    TPU traces use the device-reported ``model_flops``.
    """
    peak_key, f_peak = ctx.peaks.lookup(card.xpu.model)
    if trace.dialect == Dialect.XLA_TPU:
        measured = _tpu_mfu(card, trace, f_peak)
    else:
        measured = _gpu_mfu(card, trace, ctx, f_peak)
    notes = {**measured.notes, "f_peak": f_peak, "peak_entry": peak_key, "devices": card.xpu.total_count}
    return Measurement(measured.value, notes=notes)


def _occupancy_frame(trace: NormalizedTrace):
    kernels = trace.frame.trace.kernels()
    with_occ = kernels.trace.with_occupancy()
    if with_occ.is_empty():
        raise NotApplicable("no kernel reports achieved occupancy")
    return with_occ, kernels.height - with_occ.height


def _bound_fraction(trace: NormalizedTrace, predicate) -> Measurement:
    with_occ, missing = _occupancy_frame(trace)
    total = with_occ["duration"].sum()
    if not total:
        raise ZeroDenominator("kernels with occupancy have zero total duration")
    selected = with_occ.filter(predicate)["duration"].sum()
    return Measurement(selected / total * 100, notes={"kernels_without_occupancy": missing})


@register_metric("mean_sm_coverage", unit="%", direction=Direction.HIGHER_BETTER, dialects=GPU_ONLY)
def mean_sm_coverage(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    with_occ, missing = _occupancy_frame(trace)
    value = with_occ.trace.weighted_occupancy()
    if value is None:
        raise ZeroDenominator("kernels with occupancy have zero total duration")
    return Measurement(value, notes={"kernels_without_occupancy": missing})


@register_metric("compute_bound_fraction", unit="%", direction=Direction.HIGHER_BETTER, dialects=GPU_ONLY)
def compute_bound_fraction(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    return _bound_fraction(
        trace,
        (pl.col("occupancy") > COMPUTE_BOUND_OCCUPANCY) & (pl.col("duration") > COMPUTE_BOUND_MIN_DURATION_NS),
    )


@register_metric("memory_bound_fraction", unit="%", direction=Direction.LOWER_BETTER, dialects=GPU_ONLY)
def memory_bound_fraction(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    return _bound_fraction(trace, pl.col("occupancy") < MEMORY_BOUND_OCCUPANCY)


@register_metric("dominant_kernel_concentration", unit="%", direction=Direction.LOWER_BETTER)
def dominant_kernel_concentration(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Share of kernel time in the single busiest kernel name (GPU) or HLO category (TPU)."""
    kernels = trace.frame.trace.kernels()
    if kernels.is_empty():
        raise NoKernelEvents("trace holds no kernel events")
    col = "category" if trace.dialect == Dialect.XLA_TPU else "name"
    total = kernels["duration"].sum()
    if not total:
        raise ZeroDenominator("kernel events have zero total duration")
    top = kernels.trace.busy_by(col).row(0, named=True)
    return Measurement(top["busy"] / total * 100, notes={"dominant": top[col], "grouped_by": col})


@register_metric(
    "moe_fraction", unit="%", direction=Direction.LOWER_BETTER, dialects=GPU_ONLY, requires_moe=True
)
def moe_fraction(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    kernels = trace.frame.trace.kernels()
    total = kernels["duration"].sum()
    if not total:
        raise NoKernelEvents("trace holds no kernel time")
    moe = kernels.trace.matching(ctx.patterns.moe)["duration"].sum()
    return Measurement(moe / total * 100, notes={"patterns": list(ctx.patterns.moe)})


@register_metric("load_imbalance_ratio", unit="ratio", direction=Direction.LOWER_BETTER, min_ranks=2)
def load_imbalance_ratio(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Max over min per-rank active time, where active time is the kernel interval union."""
    active = {
        timeline.rank: union_of((e.t_start, e.t_end) for e in timeline.kernel_events()).length
        for timeline in trace.ranks
    }
    idle = [rank for rank, busy in active.items() if busy == 0]
    if idle:
        raise ZeroActiveRank(f"ranks {idle} have no kernel activity")
    per_rank = {rank: ns_to_seconds(busy) for rank, busy in active.items()}
    return Measurement(max(active.values()) / min(active.values()), per_rank)
