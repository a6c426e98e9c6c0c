"""
Kineto (PyTorch profiler) GPU trace parser.

Kineto writes complete events (``"ph": "X"``) with wall-clock ``ts``/``dur`` in
microseconds. Iterations are delimited by ``ProfilerStep#N`` annotations, which
appear once on the CPU timeline (``user_annotation``) and usually again projected
onto the GPU timeline (``gpu_user_annotation``); the GPU copy wins when both exist.

Classification of device events (categories ``kernel``, ``gpu_memcpy``, ``gpu_memset``):
    1. ``kernel`` events whose names match an NCCL collective pattern -> Collective
    2. copy-like names, or any ``gpu_memcpy``/``gpu_memset`` event -> MemTransfer
    3. remaining ``kernel`` events -> Compute

Host-side events (CPU ops, CUDA runtime calls, annotations) become Other, so a
``cudaMemcpyAsync`` launch never counts as device copy time.

Example:
    >>> timeline = parse_kineto(open("rank0.json", "rb"))
    >>> [w.duration for w in timeline.steps]
    [500000000, 510000000, 495000000]
"""

import json
import logging
from collections import Counter
from typing import IO, Any, Iterable

from tracekit.trace.base import TraceParser
from tracekit.trace.model import Dialect, EventClass, RankTimeline, StepWindow, TraceEvent
from tracekit.trace.patterns import ClassificationPatterns
from tracekit.trace.registry import register_dialect
from tracekit.utils.time import us_to_ns

logger = logging.getLogger(__name__)

GPU_ANNOTATION = "gpu_user_annotation"

# element sizes for the dtype strings NCCL record_param_comms writes into args
DTYPE_SIZES = {
    "float": 4,
    "float32": 4,
    "double": 8,
    "float64": 8,
    "half": 2,
    "float16": 2,
    "bfloat16": 2,
    "int": 4,
    "int32": 4,
    "long": 8,
    "int64": 8,
    "short": 2,
    "int16": 2,
    "char": 1,
    "byte": 1,
    "int8": 1,
    "uint8": 1,
    "bool": 1,
    "float8_e4m3fn": 1,
    "float8_e5m2": 1,
}


def _int_arg(args: dict, *keys: str) -> int | None:
    for key in keys:
        value = args.get(key)
        if value is None or isinstance(value, bool):
            continue
        try:
            return int(value)
        except (TypeError, ValueError):
            continue
    return None


def _group_ranks(value: Any) -> tuple[int, ...] | None:
    if value is None:
        return None
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            return None
    if not isinstance(value, list):
        return None
    return tuple(int(r) for r in value)


def collective_attrs(args: dict) -> dict[str, Any]:
    """
    Message size and communicator attributes from NCCL kernel args.

    Explicit ``bytes`` wins. Otherwise the larger of the in/out element counts is
    kept with the element size of the reported dtype, so AllGather and
    ReduceScatter are sized by their full (unsharded) buffer.
    """
    attrs: dict[str, Any] = {}
    size = _int_arg(args, "bytes", "msg_bytes")
    if size is not None:
        attrs["bytes"] = size
    else:
        counts = [n for n in (_int_arg(args, "In msg nelems"), _int_arg(args, "Out msg nelems")) if n is not None]
        if counts:
            attrs["elements"] = max(counts)
        elem_size = _int_arg(args, "elem_size")
        if elem_size is None:
            elem_size = DTYPE_SIZES.get(str(args.get("dtype", "")).lower())
        if elem_size is not None:
            attrs["elem_size"] = elem_size

    group_size = _int_arg(args, "Group size", "group_size")
    ranks = _group_ranks(args.get("Process Group Ranks"))
    if ranks is not None:
        attrs["group_ranks"] = ranks
        if group_size is None:
            group_size = len(ranks)
    if group_size is not None:
        attrs["group_size"] = group_size
    return attrs


@register_dialect(Dialect.KINETO_GPU)
class KinetoParser(TraceParser):
    """
    Parser for PyTorch profiler (Kineto) Chrome traces.
    """

    def _parse_events(
        self, raw_events: Iterable[dict], rank: int, warnings: Counter
    ) -> tuple[list[TraceEvent], list[StepWindow]]:
        patterns = self.patterns
        device_categories = set(patterns.kineto_device_categories)
        events: list[TraceEvent] = []
        # raw step number -> (window, came from the GPU timeline)
        step_spans: dict[int, tuple[StepWindow, bool]] = {}

        for raw in raw_events:
            if raw.get("ph", "X") != "X":
                continue
            name = str(raw.get("name", ""))
            if raw.get("ts") is None:
                warnings["missing_ts"] += 1
                continue
            t_start = us_to_ns(raw["ts"])
            if raw.get("dur") is None:
                warnings["missing_dur"] += 1
                duration = 0
            else:
                duration = us_to_ns(raw["dur"])
            if duration < 0:
                warnings["negative_dur"] += 1
                continue
            category = str(raw.get("cat", ""))
            cat = category.lower()
            args = raw.get("args") or {}
            stream = f"{raw.get('pid', '')}:{raw.get('tid', '')}"

            step_match = patterns.step_re.search(name)
            if step_match:
                raw_index = int(step_match.group(1))
                window = self._step_window(t_start, duration, raw_index, warnings)
                on_gpu = cat == GPU_ANNOTATION
                if window is not None:
                    seen = step_spans.get(raw_index)
                    if seen is None or (on_gpu and not seen[1]):
                        step_spans[raw_index] = (window, on_gpu)
                events.append(TraceEvent(rank, stream, name, t_start, duration, EventClass.MARKER, category))
                continue

            attrs: dict[str, Any] = {}
            if cat in device_categories:
                kind = patterns.collective_kind(name) if cat == "kernel" else None
                if kind is not None:
                    klass = EventClass.COLLECTIVE
                    attrs = {"collective_kind": str(kind), **collective_attrs(args)}
                elif cat != "kernel" or patterns.is_mem_transfer(name):
                    klass = EventClass.MEM_TRANSFER
                    size = _int_arg(args, "bytes")
                    if size is not None:
                        attrs["bytes"] = size
                else:
                    klass = EventClass.COMPUTE
                occupancy = args.get("est. achieved occupancy %")
                if occupancy is not None:
                    attrs["occupancy"] = float(occupancy)
            else:
                klass = EventClass.OTHER

            events.append(TraceEvent(rank, stream, name, t_start, duration, klass, category, attrs))

        steps = [window for window, _ in step_spans.values()]
        logger.debug("Kineto rank %d: %d events, %d step windows", rank, len(events), len(steps))
        return events, steps


def parse_kineto(
    stream: IO[bytes], patterns: ClassificationPatterns | None = None, rank: int = 0, source: str = ""
) -> RankTimeline:
    """
    Parse one Kineto Chrome-trace document into a rank timeline.

    Args:
        stream: Binary stream of the JSON document
        patterns: Classification tables; packaged defaults when omitted
        rank: Rank index to stamp on events

    Returns:
        RankTimeline; ``warnings`` tallies skipped or defaulted events

    Raises:
        ParseError: Malformed JSON
        EmptyTrace: No device kernel events
    """
    return KinetoParser(patterns=patterns).parse(stream, rank=rank, source=source)
