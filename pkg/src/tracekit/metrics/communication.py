"""
Communication tools: time share, compute overlap, exposed time, straggler delay,
bus bandwidth per collective kind and per-step traffic volume.

Per-step tools read steady-state windows only (TrainStep, or DecodeStep for
inference) and drop the first and last of them.
"""

import logging
from bisect import bisect_right
from collections import defaultdict

import numpy as np

from tracekit.card.schema import WorkloadCard
from tracekit.errors import (
    AllStepsCommFree,
    NoKernelEvents,
    NoMatchedCollectives,
    NoSizedCollectives,
    TooFewSteps,
)
from tracekit.metrics.base import Direction, Measurement, MetricContext, MetricResult, inner_steps, measured_steps
from tracekit.metrics.registry import register_metric
from tracekit.trace.model import CollectiveKind, Dialect, EventClass, NormalizedTrace, RankTimeline, StepWindow
from tracekit.utils.collectives import bandwidth_factor
from tracekit.utils.intervals import IntervalSet, intersect_len, restrict, union_of
from tracekit.utils.time import ns_to_seconds

logger = logging.getLogger(__name__)

GB = 1e9


def class_union(timeline: RankTimeline, *klasses: EventClass) -> IntervalSet:
    return union_of((e.t_start, e.t_end) for e in timeline.of_class(*klasses))


def step_comm_breakdown(
    comm: IntervalSet, compute: IntervalSet, window: StepWindow
) -> tuple[int, int, int]:
    """
    Communication inside one step window, split by concurrency with compute.

    Returns:
        (communication ns, overlapped ns, exposed ns); the last two sum to the first
    """
    comm_in = restrict(comm, window.t_start, window.t_end)
    compute_in = restrict(compute, window.t_start, window.t_end)
    total = comm_in.length
    overlapped = intersect_len(comm_in, compute_in)
    return total, overlapped, total - overlapped


def _inner_windows(card: WorkloadCard, timeline: RankTimeline) -> list[StepWindow]:
    windows = measured_steps(card, timeline)
    if len(windows) < 3:
        raise TooFewSteps(f"rank {timeline.rank} has {len(windows)} steps; overlap tools need at least 3")
    return inner_steps(windows)


@register_metric("communication_fraction", unit="%", direction=Direction.LOWER_BETTER)
def communication_fraction(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Collective time over all kernel time (interval unions), mean over ranks with kernel time."""
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        kernels = class_union(timeline, EventClass.COMPUTE, EventClass.COLLECTIVE, EventClass.MEM_TRANSFER)
        if kernels.length == 0:
            logger.debug("rank %d has no kernel time, left out of communication_fraction", timeline.rank)
            continue
        per_rank[timeline.rank] = class_union(timeline, EventClass.COLLECTIVE).length / kernels.length * 100
    if not per_rank:
        raise NoKernelEvents("no rank has kernel time")
    return Measurement(float(np.mean(list(per_rank.values()))), per_rank)


@register_metric("compute_comm_overlap", unit="%", direction=Direction.HIGHER_BETTER)
def compute_comm_overlap(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Share of collective time that runs concurrently with compute, per inner step."""
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        comm = class_union(timeline, EventClass.COLLECTIVE)
        compute = class_union(timeline, EventClass.COMPUTE)
        fractions = []
        for window in _inner_windows(card, timeline):
            total, overlapped, _ = step_comm_breakdown(comm, compute, window)
            if total:
                fractions.append(overlapped / total * 100)
        if fractions:
            per_rank[timeline.rank] = float(np.mean(fractions))
    if not per_rank:
        raise AllStepsCommFree("no inner step holds collective communication")
    return Measurement(float(np.mean(list(per_rank.values()))), per_rank)


@register_metric("total_communication_time", unit="s", direction=Direction.LOWER_BETTER)
def total_communication_time(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """Exposed (not overlapped) collective time per inner step."""
    per_rank: dict[int, float] = {}
    for timeline in trace.ranks:
        comm = class_union(timeline, EventClass.COLLECTIVE)
        compute = class_union(timeline, EventClass.COMPUTE)
        exposed = [step_comm_breakdown(comm, compute, w)[2] for w in _inner_windows(card, timeline)]
        per_rank[timeline.rank] = ns_to_seconds(float(np.mean(exposed)))
    return Measurement(float(np.mean(list(per_rank.values()))), per_rank)


def collectives_by_kind(timeline: RankTimeline) -> dict[CollectiveKind, list]:
    """Collective events of one rank grouped by kind, in start order."""
    grouped: dict[CollectiveKind, list] = defaultdict(list)
    for event in timeline.of_class(EventClass.COLLECTIVE):
        grouped[event.collective_kind].append(event)
    return grouped


@register_metric(
    "straggler", unit="ratio", direction=Direction.LOWER_BETTER, dialects=[Dialect.KINETO_GPU], min_ranks=2
)
def straggler(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
    """
    Mean of (max - min) / max duration over collective instances matched across
    ranks by kind and per-kind occurrence index.
    """
    by_rank = [collectives_by_kind(timeline) for timeline in trace.ranks]
    delays = []
    truncated: dict[str, list[int]] = {}
    for kind in CollectiveKind:
        counts = [len(grouped.get(kind, [])) for grouped in by_rank]
        matched = min(counts)
        if len(set(counts)) > 1:
            truncated[str(kind)] = counts
            logger.warning("%s counts differ across ranks %s; matching the first %d", kind, counts, matched)
        for i in range(matched):
            durations = [grouped[kind][i].duration for grouped in by_rank]
            longest = max(durations)
            if longest > 0:
                delays.append((longest - min(durations)) / longest)
    if not delays:
        raise NoMatchedCollectives("no collective instance appears on every rank")
    notes = {"instances": len(delays)}
    if truncated:
        notes["truncated_counts"] = truncated
    return Measurement(float(np.mean(delays)), notes=notes)


def lower_median(values: list[float]) -> float:
    """Median; for an even count the lower of the two central values."""
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def collective_bandwidth(trace: NormalizedTrace, kind: CollectiveKind) -> Measurement:
    """
    Median bus bandwidth (decimal GB/s) of sized collectives of one kind.

    Raises:
        NoSizedCollectives: No event of the kind carries bytes, group size and duration
    """
    bandwidths = []
    unsized = 0
    for timeline in trace.ranks:
        for event in timeline.of_class(EventClass.COLLECTIVE):
            if event.collective_kind != kind:
                continue
            size, group = event.message_bytes, event.group_size
            if size is None or group is None or event.duration == 0:
                unsized += 1
                continue
            bandwidths.append(size * bandwidth_factor(kind, group) / ns_to_seconds(event.duration) / GB)
    if not bandwidths:
        raise NoSizedCollectives(f"no sized {kind} collectives")
    return Measurement(lower_median(bandwidths), notes={"events": len(bandwidths), "unsized_events": unsized})


def _register_bandwidth(key: str, kind: CollectiveKind):
    @register_metric(key, unit="GB/s", direction=Direction.HIGHER_BETTER)
    def tool(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> Measurement:
        return collective_bandwidth(trace, kind)

    tool.__name__ = key
    return tool


bw_allgather = _register_bandwidth("bw_allgather", CollectiveKind.ALL_GATHER)
bw_allreduce = _register_bandwidth("bw_allreduce", CollectiveKind.ALL_REDUCE)
bw_reducescatter = _register_bandwidth("bw_reducescatter", CollectiveKind.REDUCE_SCATTER)
bw_alltoall = _register_bandwidth("bw_alltoall", CollectiveKind.ALL_TO_ALL)


@register_metric("traffic_volume", unit="B/step", direction=Direction.LOWER_BETTER)
def collective_traffic_volume(card: WorkloadCard, trace: NormalizedTrace, ctx: MetricContext) -> list[MetricResult]:
    """
    Mean collective bytes per step, one ``traffic_volume_<kind>`` result per kind.

    Events count towards the step containing their start. Inner steps are used when a
    rank has at least three windows, all windows otherwise.
    """
    per_kind: dict[CollectiveKind, dict[int, float]] = defaultdict(dict)
    for timeline in trace.ranks:
        windows = measured_steps(card, timeline)
        steps = inner_steps(windows) if len(windows) >= 3 else windows
        starts = [w.t_start for w in steps]
        totals: dict[CollectiveKind, int] = defaultdict(int)
        for event in timeline.of_class(EventClass.COLLECTIVE):
            size = event.message_bytes
            if size is None:
                continue
            i = bisect_right(starts, event.t_start) - 1
            if i >= 0 and steps[i].contains(event.t_start):
                totals[event.collective_kind] += size
        for kind, total in totals.items():
            per_kind[kind][timeline.rank] = total / len(steps)

    results = []
    for kind in CollectiveKind:
        if kind not in per_kind:
            continue
        per_rank = per_kind[kind]
        # ranks without this kind moved zero bytes
        values = [per_rank.get(timeline.rank, 0.0) for timeline in trace.ranks]
        results.append(
            MetricResult(
                f"traffic_volume_{str(kind).lower()}",
                float(np.mean(values)),
                "B/step",
                Direction.LOWER_BETTER,
                dict(per_rank),
            )
        )
    return results
