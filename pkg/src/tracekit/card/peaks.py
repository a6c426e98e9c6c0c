"""
Peak dense BF16 FLOP/s per device model.

The table ships as editable YAML (``tracekit/data/peaks.yaml``) and can be replaced
per run with ``--peaks FILE`` or ``TRACEKIT_PEAKS``. Card hardware names are matched
loosely: case, punctuation, a leading vendor name and a trailing form factor or
memory size are ignored, so ``nvidia_a100``, ``A100`` and ``NVIDIA-A100-SXM4-80GB``
all resolve to ``a100``. Other suffixes name different parts (``L40S`` is not ``l40``).
"""

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from tracekit.config import peaks_path
from tracekit.errors import MissingPeakSpec, ParseError

logger = logging.getLogger(__name__)

VENDOR_PREFIXES = ("nvidia", "google", "amd", "intel")
FORM_FACTOR_SUFFIX = re.compile(r"(?:sxm\d*|pcie|nvl|\d+gb)+")


def normalize_model(name: str) -> str:
    key = re.sub(r"[^a-z0-9]", "", name.lower())
    for vendor in VENDOR_PREFIXES:
        if key.startswith(vendor) and len(key) > len(vendor):
            return key[len(vendor) :]
    return key


@dataclass(frozen=True)
class PeakSpecTable:
    peaks: dict[str, float]
    source: str = field(default="", compare=False)

    def __post_init__(self):
        for model, value in self.peaks.items():
            if not value > 0:
                raise ValueError(f"Peak FLOP/s for {model!r} must be > 0, got {value}")

    def lookup(self, model: str | None) -> tuple[str, float]:
        """
        Resolve a card hardware model to (table key, peak FLOP/s).

        Raises:
            MissingPeakSpec: No entry matches
        """
        if not model:
            raise MissingPeakSpec("workload card names no hardware model")
        wanted = normalize_model(model)
        index = {normalize_model(key): key for key in self.peaks}
        if wanted in index:
            key = index[wanted]
            return key, self.peaks[key]
        # a table key followed only by form factor or memory size, e.g. a100 for a100sxm480gb
        for norm in sorted(index, key=len, reverse=True):
            if wanted.startswith(norm) and FORM_FACTOR_SUFFIX.fullmatch(wanted[len(norm) :]):
                key = index[norm]
                return key, self.peaks[key]
        raise MissingPeakSpec(f"no peak FLOP/s entry for hardware model {model!r} in {self.source or 'peak table'}")


def load_peaks(path: str | Path | None = None) -> PeakSpecTable:
    """Load the peak table from ``path``, ``TRACEKIT_PEAKS`` or the packaged default."""
    path = Path(path) if path is not None else peaks_path()
    logger.info("Loading peak FLOP/s table from %s", path)
    try:
        with open(path) as f:
            table = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ParseError(f"invalid peak table: {e}", source=str(path)) from e
    if not isinstance(table, dict):
        raise ParseError("peak table must map hardware model to FLOP/s", source=str(path))
    return PeakSpecTable({str(k): float(v) for k, v in table.items()}, source=str(path))
