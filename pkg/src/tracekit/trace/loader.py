"""
Multi-file trace loading.

Each input file is one rank. Files are sorted lexicographically and rank ``i`` is
the ``i``-th path, so ``rank0.json``..``rank9.json`` need zero padding past ten ranks.
The dialect is detected from the first events of every file; mixed inputs are
rejected before any full parse starts.

Example:
    >>> trace = load_trace(["traces/rank1.json", "traces/rank0.json"])
    >>> trace.dialect, trace.num_ranks
    (<Dialect.KINETO_GPU: 'KinetoGpu'>, 2)
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from itertools import islice
from pathlib import Path
from typing import Iterable

import ijson
from tqdm import tqdm

from tracekit.errors import DialectMismatch, ParseError
from tracekit.trace.base import open_trace
from tracekit.trace.model import ClockNote, Dialect, NormalizedTrace, RankTimeline
from tracekit.trace.patterns import ClassificationPatterns, load_patterns
from tracekit.trace.registry import get_parser

logger = logging.getLogger(__name__)

DETECTION_WINDOW = 2000

CLOCK_NOTES = {
    Dialect.KINETO_GPU: ClockNote("us", "ns = ts * 1000"),
    Dialect.XLA_TPU: ClockNote("ps", "ns = round(ps / 1000)"),
}


def detect_dialect(path: str | Path, window: int = DETECTION_WINDOW) -> Dialect:
    """
    Guess the dialect of one file from its first ``window`` events.

    Any device picosecond field means XLA; a ``ProfilerStep`` annotation or a
    ``kernel`` category means Kineto.

    Raises:
        ParseError: Neither signature found, or malformed JSON
    """
    saw_kineto = False
    with open_trace(path) as f:
        try:
            for event in islice(ijson.items(f, "traceEvents.item"), window):
                if not isinstance(event, dict):
                    continue
                args = event.get("args") or {}
                if isinstance(args, dict) and ("device_offset_ps" in args or "device_duration_ps" in args):
                    return Dialect.XLA_TPU
                if str(event.get("name", "")).startswith("ProfilerStep") or event.get("cat") == "kernel":
                    saw_kineto = True
        except ijson.JSONError as e:
            raise ParseError(f"malformed trace JSON: {e}", source=str(path)) from e
    if saw_kineto:
        return Dialect.KINETO_GPU
    raise ParseError("cannot detect trace dialect from the first events", source=str(path))


def load_trace(
    paths: Iterable[str | Path],
    dialect: Dialect | str = "auto",
    patterns: ClassificationPatterns | None = None,
    phase: str | None = None,
    first_is_prefill: bool = True,
    workers: int = 1,
    progress: bool = False,
) -> NormalizedTrace:
    """
    Load one trace file per rank into a NormalizedTrace.

    Args:
        paths: Trace files (``.json`` or ``.json.gz``), one per rank
        dialect: ``"auto"`` or an explicit dialect name
        patterns: Classification tables; defaults (plus env override) when omitted
        phase: Card phase used to label step windows (``training``/``inference``)
        first_is_prefill: For inference, label the first window Prefill
        workers: Parse files on this many threads
        progress: Show a tqdm bar over files

    Returns:
        NormalizedTrace with ranks in sorted path order

    Raises:
        ValueError: No paths given
        DialectMismatch: Files belong to different dialects
    """
    ordered = sorted(str(p) for p in paths)
    if not ordered:
        raise ValueError("load_trace needs at least one trace file")
    patterns = patterns or load_patterns()

    if dialect == "auto":
        detected = {path: detect_dialect(path) for path in ordered}
        kinds = set(detected.values())
        if len(kinds) > 1:
            listing = ", ".join(f"{Path(p).name}={d}" for p, d in detected.items())
            raise DialectMismatch(f"input files mix trace dialects: {listing}")
        resolved = kinds.pop()
    else:
        resolved = Dialect(dialect)
    logger.info("Loading %d %s trace file(s)", len(ordered), resolved)

    parser = get_parser(resolved, patterns=patterns)

    def _parse(item: tuple[int, str]) -> RankTimeline:
        rank, path = item
        return parser.parse_file(path, rank=rank)

    items = list(enumerate(ordered))
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            ranks = list(tqdm(pool.map(_parse, items), total=len(items), disable=not progress, desc="parse"))
    else:
        ranks = [_parse(item) for item in tqdm(items, disable=not progress, desc="parse")]

    trace = NormalizedTrace(dialect=resolved, ranks=tuple(ranks), clock_unit_note=CLOCK_NOTES[resolved])
    return trace.relabel_steps(phase, first_is_prefill=first_is_prefill)
