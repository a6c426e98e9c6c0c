"""
Memory-transfer tools.

``memory_transfer_overhead`` counts copy time with no concurrent compute. Numerators
and denominators are summed over ranks before the division, so one rank's clock
offset cannot leak into another's.
"""

from tracekit.card.schema import WorkloadCard
from tracekit.errors import NoSizedTransfers, ZeroDenominator
from tracekit.metrics.base import Direction, Measurement, MetricContext
from tracekit.metrics.registry import register_metric
from tracekit.trace.model import Dialect, EventClass, NormalizedTrace, RankTimeline
from tracekit.utils.intervals import subtract_len, union_of

GB = 1e9


def _span(timeline: RankTimeline) -> int:
    kernels = timeline.kernel_events()
    if not kernels:
        return 0
    return max(e.t_end for e in kernels) - min(e.t_start for e in kernels)


@register_metric("memory_transfer_overhead", unit="%", direction=Direction.LOWER_BETTER)
def memory_transfer_overhead(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """
    Exposed copy time over execution time.

    GPU execution time is the kernel-activity span of each rank; TPU execution time is
    the total duration of the rank's step windows.
    """
    exposed_total = 0
    elapsed_total = 0
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        copies = union_of((e.t_start, e.t_end) for e in timeline.of_class(EventClass.MEM_TRANSFER))
        compute = union_of((e.t_start, e.t_end) for e in timeline.of_class(EventClass.COMPUTE))
        exposed = subtract_len(copies, compute)
        if trace.dialect == Dialect.XLA_TPU:
            elapsed = sum(w.duration for w in timeline.steps)
        else:
            elapsed = _span(timeline)
        exposed_total += exposed
        elapsed_total += elapsed
        if elapsed:
            per_rank[timeline.rank] = exposed / elapsed * 100
    if elapsed_total == 0:
        raise ZeroDenominator("no execution time to compare copies against")
    return Measurement(
        exposed_total / elapsed_total * 100,
        per_rank,
        notes={"exposed_ns": exposed_total, "elapsed_ns": elapsed_total},
    )


@register_metric("average_memory_bandwidth", unit="GB/s", direction=Direction.HIGHER_BETTER)
def average_memory_bandwidth(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Total copied bytes over total copy duration, decimal GB."""
    total_bytes = 0
    total_ns = 0
    unsized = 0
    for timeline in trace.ranks:
        for event in timeline.of_class(EventClass.MEM_TRANSFER):
            size = event.message_bytes
            if size is None:
                unsized += 1
                continue
            total_bytes += size
            total_ns += event.duration
    if total_ns == 0:
        raise NoSizedTransfers("no memory transfer reports a byte count and a duration")
    return Measurement(total_bytes / GB / (total_ns / 1e9), notes={"unsized_transfers": unsized})
