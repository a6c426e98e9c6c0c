"""
Event classification tables.

Kernel and HLO naming changes across library versions, so the regexes that decide
whether an event is a collective, a memory transfer or compute are data. Defaults
ship in ``tracekit/data/patterns.json``; an override file (``--patterns`` or
``TRACEKIT_PATTERNS``) replaces individual keys and keeps the rest.

Example:
    >>> patterns = load_patterns()
    >>> patterns.collective_kind("ncclAllReduce_Sum_f32_RING_LL")
    <CollectiveKind.ALL_REDUCE: 'AllReduce'>
    >>> patterns.is_mem_transfer("Memcpy HtoD (Pageable -> Device)")
    True
"""

import json
import logging
import re
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

from tracekit.config import DEFAULT_PATTERNS_FILE, patterns_path
from tracekit.errors import ParseError
from tracekit.trace.model import CollectiveKind

logger = logging.getLogger(__name__)


def _compile(patterns: list[str]) -> list[re.Pattern]:
    return [re.compile(p, re.IGNORECASE) for p in patterns]


@dataclass(frozen=True)
class ClassificationPatterns:
    """
    Regex tables used by the Kineto and XLA parsers and by the MoE tool.

    Matching is case-insensitive substring search (``re.search``).
    """

    kineto_step: str
    kineto_device_categories: tuple[str, ...]
    collective: dict[str, list[str]]
    mem_transfer: list[str]
    moe: list[str]
    xla_step_marker: str
    xla_collective: dict[str, str]
    xla_compute: list[str]
    xla_excluded: list[str]
    xla_copy: str
    source: str = field(default="", compare=False)

    @cached_property
    def _collective_re(self) -> list[tuple[CollectiveKind, list[re.Pattern]]]:
        return [(CollectiveKind(kind), _compile(pats)) for kind, pats in self.collective.items()]

    @cached_property
    def _mem_re(self) -> list[re.Pattern]:
        return _compile(self.mem_transfer)

    @cached_property
    def _moe_re(self) -> list[re.Pattern]:
        return _compile(self.moe)

    @cached_property
    def _xla_excluded_re(self) -> list[re.Pattern]:
        return _compile(self.xla_excluded)

    @cached_property
    def step_re(self) -> re.Pattern:
        return re.compile(self.kineto_step)

    @cached_property
    def copy_re(self) -> re.Pattern:
        return re.compile(self.xla_copy)

    def collective_kind(self, name: str) -> CollectiveKind | None:
        """Collective kind of a GPU kernel name, or None when it is not a collective."""
        for kind, regexes in self._collective_re:
            if any(r.search(name) for r in regexes):
                return kind
        return None

    def is_mem_transfer(self, name: str) -> bool:
        return any(r.search(name) for r in self._mem_re)

    def is_moe(self, name: str) -> bool:
        return any(r.search(name) for r in self._moe_re)

    def xla_collective_kind(self, category: str) -> CollectiveKind | None:
        """
        Strict HLO category match; async ``-start``/``-done`` halves count too.

        ``broadcast`` is deliberately absent: in HLO it is a local layout op.
        """
        cat = category.strip().lower()
        for suffix in ("-start", "-done"):
            if cat.endswith(suffix):
                cat = cat[: -len(suffix)]
                break
        kind = self.xla_collective.get(cat)
        return None if kind is None else CollectiveKind(kind)

    def is_xla_compute(self, category: str) -> bool:
        cat = category.lower()
        return any(keyword in cat for keyword in self.xla_compute)

    def is_xla_excluded(self, name: str) -> bool:
        return any(r.search(name) for r in self._xla_excluded_re)


def _read_table(path: Path) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid pattern table: {e.msg}", offset=e.pos, source=str(path)) from e


def load_patterns(path: str | Path | None = None) -> ClassificationPatterns:
    """
    Load the packaged defaults, then overlay ``path`` (or ``TRACEKIT_PATTERNS``).

    Args:
        path: Optional JSON override; keys present there replace the defaults

    Returns:
        ClassificationPatterns
    """
    table = _read_table(DEFAULT_PATTERNS_FILE)
    override_path = Path(path) if path is not None else patterns_path()
    source = str(DEFAULT_PATTERNS_FILE)
    if override_path != DEFAULT_PATTERNS_FILE:
        logger.info("Loading classification patterns from %s", override_path)
        override = _read_table(override_path)
        unknown = set(override) - set(table)
        if unknown:
            raise ValueError(f"Unknown pattern keys {sorted(unknown)}. Available keys: {sorted(table)}")
        table.update(override)
        source = str(override_path)
    for kind in table["collective"]:
        CollectiveKind(kind)
    return ClassificationPatterns(
        kineto_step=table["kineto_step"],
        kineto_device_categories=tuple(c.lower() for c in table["kineto_device_categories"]),
        collective=dict(table["collective"]),
        mem_transfer=list(table["mem_transfer"]),
        moe=list(table["moe"]),
        xla_step_marker=table["xla_step_marker"],
        xla_collective={k.lower(): v for k, v in table["xla_collective"].items()},
        xla_compute=[c.lower() for c in table["xla_compute"]],
        xla_excluded=list(table["xla_excluded"]),
        xla_copy=table["xla_copy"],
        source=source,
    )
