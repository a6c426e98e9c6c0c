"""
Base class for Chrome-trace JSON parsers.

Both supported dialects share the container format: a top-level ``traceEvents``
array. ``TraceParser`` streams that array with ijson, so memory stays bounded per
event even for multi-gigabyte files, and leaves classification to subclasses.

Key Features:
    - Streaming ``traceEvents`` iteration (no whole-file DOM)
    - Transparent gzip input (``.json.gz``)
    - Byte offsets on malformed JSON
    - Shared finishing step: stable sort by start time, step window cleanup,
      empty-trace detection, warning tallies

Example:
    >>> parser = get_parser("KinetoGpu")
    >>> timeline = parser.parse_file("traces/rank0.json.gz", rank=0)
    >>> timeline.warnings
    {'missing_ts': 3}

See Also:
    tracekit.trace.kineto: GPU (Kineto) dialect
    tracekit.trace.xla: TPU (XLA) dialect
    tracekit.trace.registry: Registry used to look parsers up by dialect
"""

import gzip
import logging
from collections import Counter
from operator import attrgetter
from pathlib import Path
from typing import IO, Any, Generator

import ijson

from tracekit.errors import EmptyTrace, ParseError
from tracekit.trace.model import KERNEL_CLASSES, Dialect, RankTimeline, StepWindow, TraceEvent
from tracekit.trace.patterns import ClassificationPatterns, load_patterns

logger = logging.getLogger(__name__)


class _CountingReader:
    """File wrapper that tracks how many bytes the JSON parser consumed."""

    def __init__(self, raw: IO[bytes]):
        self._raw = raw
        self.position = 0

    def read(self, size: int = -1) -> bytes:
        data = self._raw.read(size)
        self.position += len(data)
        return data


def open_trace(path: str | Path) -> IO[bytes]:
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


class TraceParser:
    """
    Base class for parsing one trace file into a ``RankTimeline``.

    Subclasses implement ``_parse_events``, which consumes the raw event stream and
    returns classified events, step windows and a warning tally.
    """

    dialect: Dialect

    def __init__(self, patterns: ClassificationPatterns | None = None):
        self.patterns = patterns or load_patterns()

    def iter_events(self, stream: IO[bytes], source: str = "") -> Generator[dict[str, Any], None, None]:
        """
        Stream the ``traceEvents`` array.

        Raises:
            ParseError: On malformed JSON, with the byte offset reached so far
        """
        reader = _CountingReader(stream)
        try:
            for event in ijson.items(reader, "traceEvents.item"):
                if isinstance(event, dict):
                    yield event
        except ijson.JSONError as e:
            raise ParseError(f"malformed trace JSON: {e}", offset=reader.position, source=source) from e

    def parse(self, stream: IO[bytes], rank: int = 0, source: str = "") -> RankTimeline:
        """
        Parse an open binary stream.

        Args:
            stream: Binary file-like object holding a Chrome-trace JSON document
            rank: Rank index assigned to every event
            source: Name used in logs and error messages

        Returns:
            RankTimeline with sorted events and step windows
        """
        warnings: Counter = Counter()
        events, steps = self._parse_events(self.iter_events(stream, source), rank, warnings)
        return self._finish(rank, events, steps, warnings, source)

    def parse_file(self, path: str | Path, rank: int = 0) -> RankTimeline:
        logger.info("Parsing %s trace %s as rank %d", self.dialect, path, rank)
        with open_trace(path) as f:
            return self.parse(f, rank=rank, source=str(path))

    def _parse_events(
        self, raw_events, rank: int, warnings: Counter
    ) -> tuple[list[TraceEvent], list[StepWindow]]:
        raise NotImplementedError

    @staticmethod
    def _step_window(t_start: int, duration: int, raw_index: int | None, warnings: Counter) -> StepWindow | None:
        if duration <= 0:
            warnings["empty_step"] += 1
            return None
        # index is provisional; _finish renumbers by start time
        return StepWindow(0, t_start, t_start + duration, raw_index=raw_index)

    def _finish(
        self,
        rank: int,
        events: list[TraceEvent],
        steps: list[StepWindow],
        warnings: Counter,
        source: str,
    ) -> RankTimeline:
        if not any(e.klass in KERNEL_CLASSES for e in events):
            raise EmptyTrace(f"{source or 'trace'} holds no device kernel events")

        # sorted() is stable, so same-start events keep their stream order
        events = sorted(events, key=attrgetter("t_start"))

        windows: list[StepWindow] = []
        for w in sorted(steps, key=attrgetter("t_start")):
            if windows and w.t_start < windows[-1].t_end:
                warnings["overlapping_step"] += 1
                logger.warning("%s: step window %s overlaps the previous one, dropped", source, w.raw_index)
                continue
            windows.append(StepWindow(len(windows), w.t_start, w.t_end, w.kind, w.raw_index))

        if warnings:
            logger.warning("%s: parse warnings %s", source or "trace", dict(warnings))
        return RankTimeline(
            rank=rank,
            events=tuple(events),
            steps=tuple(windows),
            source=source,
            warnings=dict(warnings),
        )
