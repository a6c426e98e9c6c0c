"""
Result and context types shared by all metric tools.

A tool is a function ``f(card, trace, ctx) -> MetricResult``. ``MetricContext``
carries everything a tool may need beyond the evidence itself: the peak FLOP/s
table, the classification patterns (MoE names), run options and an optional
network override for the utility tool.
"""

import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from typing import Any

from tracekit.card.peaks import PeakSpecTable, load_peaks
from tracekit.card.schema import WorkloadCard
from tracekit.config import DEFAULT_MAX_UNSIZED_FRACTION
from tracekit.errors import NoStepWindows
from tracekit.trace.model import RankTimeline, StepKind, StepWindow
from tracekit.trace.patterns import ClassificationPatterns, load_patterns


class Direction(StrEnum):
    HIGHER_BETTER = "HigherBetter"
    LOWER_BETTER = "LowerBetter"


@dataclass(frozen=True)
class Measurement:
    """What a tool computes; the registry wraps it into a MetricResult."""

    value: float
    per_rank: dict[int, float] | None = None
    notes: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class MetricResult:
    key: str
    value: float
    unit: str
    direction: Direction
    per_rank: dict[int, float] | None = None
    notes: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"Metric {self.key} has non-finite value {self.value}")

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "key": self.key,
            "value": self.value,
            "unit": self.unit,
            "direction": str(self.direction),
            "notes": dict(self.notes),
        }
        if self.per_rank is not None:
            out["per_rank"] = {str(rank): value for rank, value in sorted(self.per_rank.items())}
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "MetricResult":
        per_rank = data.get("per_rank")
        return cls(
            key=data["key"],
            value=float(data["value"]),
            unit=data["unit"],
            direction=Direction(data["direction"]),
            per_rank=None if per_rank is None else {int(r): float(v) for r, v in per_rank.items()},
            notes=dict(data.get("notes", {})),
        )


@dataclass(frozen=True)
class MetricOptions:
    """
    Knobs that change how tools read the evidence.

    Attributes:
        drop_edge_steps: Exclude first and last windows from avg_step_time
        max_unsized_fraction: Largest tolerated share of unsized collectives in graph tools
        graph_step: Inner step converted by graph tools (0 = first inner step)
    """

    drop_edge_steps: bool = False
    max_unsized_fraction: float = DEFAULT_MAX_UNSIZED_FRACTION
    graph_step: int = 0


class MetricContext:
    """
    Per-run configuration handed to every tool.

    Tables load lazily, so a run that never evaluates MFU never reads the peak table.
    """

    def __init__(
        self,
        peaks: PeakSpecTable | None = None,
        patterns: ClassificationPatterns | None = None,
        options: MetricOptions | None = None,
        net=None,
    ):
        self._peaks = peaks
        self._patterns = patterns
        self.options = options or MetricOptions()
        self.net = net

    @cached_property
    def peaks(self) -> PeakSpecTable:
        return self._peaks if self._peaks is not None else load_peaks()

    @cached_property
    def patterns(self) -> ClassificationPatterns:
        return self._patterns if self._patterns is not None else load_patterns()


def step_kind(card: WorkloadCard) -> StepKind:
    """Steady-state window kind: DecodeStep for inference, TrainStep otherwise."""
    return StepKind.DECODE_STEP if card.is_inference else StepKind.TRAIN_STEP


def measured_steps(card: WorkloadCard, timeline: RankTimeline) -> list[StepWindow]:
    windows = timeline.steps_of(step_kind(card))
    if not windows:
        raise NoStepWindows(f"rank {timeline.rank} has no {step_kind(card)} windows")
    return windows


def inner_steps(windows: list[StepWindow]) -> list[StepWindow]:
    """Windows without the first and the last."""
    return windows[1:-1]
