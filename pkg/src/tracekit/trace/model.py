"""
Dialect-independent trace representation.

A ``NormalizedTrace`` holds one ``RankTimeline`` per input file. Each timeline keeps
its classified events sorted by start time and the step windows found on that rank.
All timestamps are integer nanoseconds on that rank's own clock; nothing here assumes
clocks agree across ranks, so metrics combine ranks only after per-rank computation.

Key Features:
    - Frozen dataclasses, safe to share across threads
    - Typed accessors for the collective/occupancy/FLOPs attributes parsers attach
    - Lazily built polars frame per rank for group-by style metrics
    - Step relabelling for inference traces (prefill first, decode afterwards)
"""

from dataclasses import dataclass, field, replace
from enum import StrEnum
from functools import cached_property
from typing import Any, Iterable, Mapping

import polars as pl


class Dialect(StrEnum):
    KINETO_GPU = "KinetoGpu"
    XLA_TPU = "XlaTpu"


class EventClass(StrEnum):
    COMPUTE = "Compute"
    COLLECTIVE = "Collective"
    MEM_TRANSFER = "MemTransfer"
    MARKER = "Marker"
    OTHER = "Other"


KERNEL_CLASSES = frozenset({EventClass.COMPUTE, EventClass.COLLECTIVE, EventClass.MEM_TRANSFER})


class CollectiveKind(StrEnum):
    ALL_REDUCE = "AllReduce"
    ALL_GATHER = "AllGather"
    REDUCE_SCATTER = "ReduceScatter"
    ALL_TO_ALL = "AllToAll"
    BROADCAST = "Broadcast"
    SEND_RECV = "SendRecv"
    OTHER = "Other"


class StepKind(StrEnum):
    TRAIN_STEP = "TrainStep"
    PREFILL = "Prefill"
    DECODE_STEP = "DecodeStep"


@dataclass(frozen=True, slots=True)
class TraceEvent:
    """
    One classified event on a (rank, stream) lane.

    ``attrs`` keys used across the package: ``collective_kind``, ``bytes``,
    ``elements``, ``elem_size``, ``group_size``, ``group_ranks``, ``occupancy``,
    ``model_flops``.
    """

    rank: int
    stream: str
    name: str
    t_start: int
    duration: int
    klass: EventClass
    category: str = ""
    attrs: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError(f"Event {self.name!r} has negative duration {self.duration}")
        if self.klass == EventClass.COLLECTIVE and "collective_kind" not in self.attrs:
            raise ValueError(f"Collective event {self.name!r} carries no collective kind")

    @property
    def t_end(self) -> int:
        return self.t_start + self.duration

    @property
    def collective_kind(self) -> CollectiveKind | None:
        kind = self.attrs.get("collective_kind")
        return None if kind is None else CollectiveKind(kind)

    @property
    def message_bytes(self) -> int | None:
        """Message size in bytes, from an explicit count or elements x element size."""
        size = self.attrs.get("bytes")
        if size is not None:
            return int(size)
        elements, elem_size = self.attrs.get("elements"), self.attrs.get("elem_size")
        if elements is not None and elem_size is not None:
            return int(elements) * int(elem_size)
        return None

    @property
    def group_size(self) -> int | None:
        size = self.attrs.get("group_size")
        return None if size is None else int(size)

    @property
    def group_ranks(self) -> tuple[int, ...] | None:
        ranks = self.attrs.get("group_ranks")
        return None if ranks is None else tuple(ranks)

    @property
    def occupancy(self) -> float | None:
        occ = self.attrs.get("occupancy")
        return None if occ is None else float(occ)

    @property
    def model_flops(self) -> float | None:
        flops = self.attrs.get("model_flops")
        return None if flops is None else float(flops)

    def shifted(self, offset_ns: int) -> "TraceEvent":
        return replace(self, t_start=self.t_start + offset_ns)


@dataclass(frozen=True, slots=True)
class StepWindow:
    index: int
    t_start: int
    t_end: int
    kind: StepKind = StepKind.TRAIN_STEP
    raw_index: int | None = None

    def __post_init__(self):
        if self.t_end <= self.t_start:
            raise ValueError(f"Step window {self.index} is empty: [{self.t_start}, {self.t_end})")

    @property
    def duration(self) -> int:
        return self.t_end - self.t_start

    def contains(self, t: int) -> bool:
        return self.t_start <= t < self.t_end


@dataclass(frozen=True)
class ClockNote:
    original_unit: str
    conversion: str


FRAME_SCHEMA = {
    "rank": pl.Int64,
    "stream": pl.String,
    "name": pl.String,
    "category": pl.String,
    "t_start": pl.Int64,
    "duration": pl.Int64,
    "klass": pl.String,
    "coll_kind": pl.String,
    "bytes": pl.Int64,
    "group_size": pl.Int64,
    "occupancy": pl.Float64,
    "model_flops": pl.Float64,
}


def events_frame(events: Iterable[TraceEvent]) -> pl.DataFrame:
    """Columnar view of events, one row per event."""
    rows = {key: [] for key in FRAME_SCHEMA}
    for e in events:
        rows["rank"].append(e.rank)
        rows["stream"].append(e.stream)
        rows["name"].append(e.name)
        rows["category"].append(e.category)
        rows["t_start"].append(e.t_start)
        rows["duration"].append(e.duration)
        rows["klass"].append(str(e.klass))
        kind = e.collective_kind
        rows["coll_kind"].append(None if kind is None else str(kind))
        rows["bytes"].append(e.message_bytes)
        rows["group_size"].append(e.group_size)
        rows["occupancy"].append(e.occupancy)
        rows["model_flops"].append(e.model_flops)
    return pl.DataFrame(rows, schema=FRAME_SCHEMA)


@dataclass(frozen=True)
class RankTimeline:
    """
    Events and step windows of one rank (one input file).
    """

    rank: int
    events: tuple[TraceEvent, ...]
    steps: tuple[StepWindow, ...] = ()
    source: str = ""
    warnings: Mapping[str, int] = field(default_factory=dict)

    def of_class(self, *klasses: EventClass) -> list[TraceEvent]:
        wanted = frozenset(klasses)
        return [e for e in self.events if e.klass in wanted]

    def kernel_events(self) -> list[TraceEvent]:
        return [e for e in self.events if e.klass in KERNEL_CLASSES]

    def steps_of(self, *kinds: StepKind) -> list[StepWindow]:
        wanted = frozenset(kinds)
        return [w for w in self.steps if w.kind in wanted]

    @cached_property
    def frame(self) -> pl.DataFrame:
        return events_frame(self.events)

    def shifted(self, offset_ns: int) -> "RankTimeline":
        """Same timeline with every timestamp moved by ``offset_ns``."""
        return replace(
            self,
            events=tuple(e.shifted(offset_ns) for e in self.events),
            steps=tuple(replace(w, t_start=w.t_start + offset_ns, t_end=w.t_end + offset_ns) for w in self.steps),
        )


@dataclass(frozen=True)
class NormalizedTrace:
    dialect: Dialect
    ranks: tuple[RankTimeline, ...]
    clock_unit_note: ClockNote
    phase: str | None = None

    @property
    def num_ranks(self) -> int:
        return len(self.ranks)

    @property
    def parse_warnings(self) -> dict[str, int]:
        total: dict[str, int] = {}
        for timeline in self.ranks:
            for key, count in timeline.warnings.items():
                total[key] = total.get(key, 0) + count
        return total

    @cached_property
    def frame(self) -> pl.DataFrame:
        if not self.ranks:
            return events_frame(())
        return pl.concat([timeline.frame for timeline in self.ranks])

    def relabel_steps(self, phase: str | None, first_is_prefill: bool = True) -> "NormalizedTrace":
        """
        Assign step kinds for the card's phase.

        Training traces get TrainStep windows. Inference traces get a Prefill first
        window followed by DecodeStep windows, or only DecodeStep windows when
        ``first_is_prefill`` is false.
        """
        if phase == self.phase and phase is not None:
            return self
        ranks = []
        for timeline in self.ranks:
            steps = []
            for w in timeline.steps:
                if phase == "inference":
                    kind = StepKind.PREFILL if (w.index == 0 and first_is_prefill) else StepKind.DECODE_STEP
                else:
                    kind = StepKind.TRAIN_STEP
                steps.append(replace(w, kind=kind))
            ranks.append(replace(timeline, steps=tuple(steps)))
        return replace(self, ranks=tuple(ranks), phase=phase)

    def with_rank(self, rank: int, timeline: RankTimeline) -> "NormalizedTrace":
        ranks = list(self.ranks)
        ranks[rank] = timeline
        return replace(self, ranks=tuple(ranks))
