"""
XLA (TPU profiler) trace parser.

Device-side events carry precise picosecond timing in ``args.device_offset_ps`` and
``args.device_duration_ps``; host events only have microsecond ``ts``/``dur``.
Events are classified by their HLO category rather than by name:

    - category all-reduce / all-gather / reduce-scatter / all-to-all /
      collective-permute (and their async -start/-done halves) -> Collective
    - ``copy-start.k`` + ``copy-done.k`` -> one MemTransfer spanning both offsets
    - dot / convolution / gemm / fusion / custom-call -> Compute
    - ``jit_*`` container spans, ``dependency-wait`` barriers, ``broadcast`` and
      anything else -> Other

Step windows come from events whose name contains the configured step marker.

Example:
    >>> timeline = parse_xla(open("tpu0.trace.json", "rb"))
    >>> timeline.of_class(EventClass.MEM_TRANSFER)[0].duration
    3000
"""

import logging
import re
from collections import Counter
from typing import IO, Any, Iterable

from tracekit.trace.base import TraceParser
from tracekit.trace.model import Dialect, EventClass, RankTimeline, StepWindow, TraceEvent
from tracekit.trace.patterns import ClassificationPatterns
from tracekit.trace.registry import register_dialect
from tracekit.utils.time import ps_to_ns, us_to_ns

logger = logging.getLogger(__name__)

_REPLICA_GROUP = re.compile(r"\{([\d,\s]+)\}")


def hlo_category(raw: dict) -> str:
    """HLO category from args, the event ``cat``, or the op name prefix."""
    args = raw.get("args") or {}
    for key in ("hlo_category", "category"):
        if args.get(key):
            return str(args[key])
    if raw.get("cat"):
        return str(raw["cat"])
    return str(raw.get("name", "")).split(".", 1)[0]


def replica_group_size(value: Any) -> int | None:
    """Size of the first group in an HLO ``replica_groups`` string like ``{{0,1},{2,3}}``."""
    if value is None:
        return None
    match = _REPLICA_GROUP.search(str(value))
    if not match:
        return None
    return len([r for r in match.group(1).split(",") if r.strip()])


def _number(value: Any) -> int | None:
    if value is None or isinstance(value, bool):
        return None
    try:
        return int(value)
    except (TypeError, ValueError):
        return None


@register_dialect(Dialect.XLA_TPU)
class XlaParser(TraceParser):
    """
    Parser for XLA/xprof Chrome traces.
    """

    def _parse_events(
        self, raw_events: Iterable[dict], rank: int, warnings: Counter
    ) -> tuple[list[TraceEvent], list[StepWindow]]:
        patterns = self.patterns
        events: list[TraceEvent] = []
        steps: list[StepWindow] = []
        # copy suffix -> (start ns, stream, bytes) of the outstanding copy-start
        open_copies: dict[str, tuple[int, str, int | None]] = {}

        for raw in raw_events:
            if raw.get("ph", "X") != "X":
                continue
            name = str(raw.get("name", ""))
            args = raw.get("args") or {}
            stream = f"{raw.get('pid', '')}:{raw.get('tid', '')}"
            offset_ps = args.get("device_offset_ps")
            duration_ps = args.get("device_duration_ps")
            on_device = offset_ps is not None and duration_ps is not None

            if on_device:
                t_start, duration = ps_to_ns(offset_ps), ps_to_ns(duration_ps)
            else:
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

            if patterns.xla_step_marker in name:
                window = self._step_window(t_start, duration, _number(args.get("step_num")), warnings)
                if window is not None:
                    steps.append(window)
                events.append(TraceEvent(rank, stream, name, t_start, duration, EventClass.MARKER))
                continue

            if not on_device:
                events.append(TraceEvent(rank, stream, name, t_start, duration, EventClass.OTHER))
                continue

            category = hlo_category(raw)
            attrs: dict[str, Any] = {}
            flops = args.get("model_flops")
            if flops is not None:
                attrs["model_flops"] = float(flops)

            copy_match = patterns.copy_re.match(name)
            if copy_match:
                half, suffix = copy_match.group(1), copy_match.group(2) or ""
                size = _number(args.get("bytes"))
                if half == "start":
                    if suffix in open_copies:
                        warnings["unmatched_copy"] += 1
                        logger.warning("copy-start%s restarted before its copy-done, first half dropped", suffix)
                    open_copies[suffix] = (t_start, stream, size)
                    continue
                started = open_copies.pop(suffix, None)
                if started is None:
                    warnings["unmatched_copy"] += 1
                    logger.warning("copy-done%s has no matching copy-start, dropped", suffix)
                    continue
                copy_start, copy_stream, start_size = started
                if t_start < copy_start:
                    warnings["unmatched_copy"] += 1
                    continue
                size = size if size is not None else start_size
                copy_attrs = {} if size is None else {"bytes": size}
                events.append(
                    TraceEvent(
                        rank,
                        copy_stream,
                        f"copy{suffix}",
                        copy_start,
                        t_start - copy_start,
                        EventClass.MEM_TRANSFER,
                        "copy",
                        copy_attrs,
                    )
                )
                continue

            if patterns.is_xla_excluded(name):
                klass = EventClass.OTHER
            elif (kind := patterns.xla_collective_kind(category)) is not None:
                klass = EventClass.COLLECTIVE
                attrs["collective_kind"] = str(kind)
                size = _number(args.get("bytes", args.get("message_bytes")))
                if size is not None:
                    attrs["bytes"] = size
                group_size = _number(args.get("group_size"))
                if group_size is None:
                    group_size = replica_group_size(args.get("replica_groups"))
                if group_size is not None:
                    attrs["group_size"] = group_size
            elif patterns.is_xla_compute(category):
                klass = EventClass.COMPUTE
            else:
                klass = EventClass.OTHER

            events.append(TraceEvent(rank, stream, name, t_start, duration, klass, category, attrs))

        for suffix in open_copies:
            warnings["unmatched_copy"] += 1
            logger.warning("copy-start%s has no matching copy-done, dropped", suffix)
        logger.debug("XLA rank %d: %d events, %d step windows", rank, len(events), len(steps))
        return events, steps


def parse_xla(
    stream: IO[bytes], patterns: ClassificationPatterns | None = None, rank: int = 0, source: str = ""
) -> RankTimeline:
    """
    Parse one XLA Chrome-trace document into a rank timeline.

    Raises:
        ParseError: Malformed JSON
        EmptyTrace: No device kernel events
    """
    return XlaParser(patterns=patterns).parse(stream, rank=rank, source=source)
